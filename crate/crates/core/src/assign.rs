//! Target-topic assignment for each student and source item.
//!
//! `Interest` mode gives item k the student's k-th top interest (cycling when
//! there are more than four items). `Random` mode draws uniformly from the
//! taxonomy minus the item's own source topic, from one ChaCha8 stream
//! seeded by `rng_seed` and consumed student by student, item by item.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{InterestProfile, ReadingItem, TopicCode, TopicTaxonomy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AssignmentMode {
    Random,
    Interest,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AssignedTopic {
    pub source_item_id: String,
    pub target_topic: TopicCode,
    pub mode: AssignmentMode,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicAssignment {
    pub student_id: String,
    pub passages: Vec<AssignedTopic>,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AssignError {
    #[error("no eligible topics for item {0:?}")]
    EmptyTaxonomy(String),
    #[error("no interest profiles supplied")]
    MissingProfile,
}

/// Taxonomy codes an item may be moved to in random mode.
pub fn eligible_topics<'t>(taxonomy: &'t TopicTaxonomy, item: &ReadingItem) -> Vec<&'t TopicCode> {
    taxonomy
        .codes()
        .iter()
        .filter(|c| Some(*c) != item.source_topic.as_ref())
        .collect()
}

pub fn assign_topics(
    profiles: &[InterestProfile],
    items: &[ReadingItem],
    mode: AssignmentMode,
    rng_seed: u64,
    taxonomy: &TopicTaxonomy,
) -> Result<Vec<TopicAssignment>, AssignError> {
    if profiles.is_empty() {
        return Err(AssignError::MissingProfile);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut out = Vec::with_capacity(profiles.len());
    for profile in profiles {
        let mut passages = Vec::with_capacity(items.len());
        for (k, item) in items.iter().enumerate() {
            let target_topic = match mode {
                AssignmentMode::Interest => {
                    if profile.top_interests.is_empty() {
                        return Err(AssignError::MissingProfile);
                    }
                    profile.top_interests[k % profile.top_interests.len()].clone()
                }
                AssignmentMode::Random => {
                    let pool = eligible_topics(taxonomy, item);
                    if pool.is_empty() {
                        return Err(AssignError::EmptyTaxonomy(item.id.clone()));
                    }
                    pool[rng.random_range(0..pool.len())].clone()
                }
            };
            passages.push(AssignedTopic {
                source_item_id: item.id.clone(),
                target_topic,
                mode,
            });
        }
        out.push(TopicAssignment {
            student_id: profile.student_id.clone(),
            passages,
        });
    }
    Ok(out)
}
