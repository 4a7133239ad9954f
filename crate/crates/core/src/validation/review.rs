//! The answerability review queue.
//!
//! A queue file holds one entry per transcreated item plus an append-only
//! log of decisions. Replaying the log against the undecided queue gives
//! back the current state. A `<queue>.lock` file keeps two sessions from
//! writing the same queue.

use std::fs::OpenOptions;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::ReadingItem;
use crate::io::{read_to_string, to_pretty_json, write_atomic};
use crate::pipeline::TranscreationRecord;
use crate::textmetrics::word_count;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Verdict {
    Accept,
    Edit { new_passage: String },
    Reject { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewDecision {
    pub item_id: String,
    pub verdict: Verdict,
    /// Words added by an edit; filled in by [`review_apply`].
    #[serde(default)]
    pub added_word_count: usize,
    /// 0-based indices of questions the reviewer found unanswerable.
    #[serde(default)]
    pub unanswerable: Vec<usize>,
    pub reviewer_id: String,
    pub timestamp: String,
}

impl ReviewDecision {
    pub fn new(item_id: impl Into<String>, verdict: Verdict, reviewer_id: impl Into<String>, timestamp: impl Into<String>) -> Self {
        ReviewDecision {
            item_id: item_id.into(),
            verdict,
            added_word_count: 0,
            unanswerable: Vec::new(),
            reviewer_id: reviewer_id.into(),
            timestamp: timestamp.into(),
        }
    }

    pub fn with_unanswerable(mut self, questions: Vec<usize>) -> Self {
        self.unanswerable = questions;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QueueEntry {
    /// The item as it currently stands (edited passage after an edit).
    pub item: ReadingItem,
    pub original_passage: String,
    /// `None` while pending.
    pub decision: Option<ReviewDecision>,
}

impl QueueEntry {
    pub fn is_pending(&self) -> bool {
        self.decision.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReviewQueue {
    pub version: u32,
    pub entries: Vec<QueueEntry>,
    pub log: Vec<ReviewDecision>,
}

#[derive(Debug, Error)]
pub enum ReviewError {
    #[error("queue file {0} already exists (use --force to replace it)")]
    QueueExists(PathBuf),
    #[error("queue {0} is locked by another review session")]
    Locked(PathBuf),
    #[error("record {0} is not complete")]
    IncompleteRecord(String),
    #[error("no queue entry for item {0:?}")]
    UnknownItem(String),
    #[error("item {0:?} already has a decision")]
    AlreadyDecided(String),
    #[error("a reject decision needs a reason")]
    MissingReason,
    #[error("an edit needs a non-empty passage")]
    EmptyPassage,
    #[error("item {item:?} has no question {index}")]
    BadQuestionIndex { item: String, index: usize },
    #[error("{0} entries are still pending")]
    PendingEntries(usize),
    #[error("malformed queue file {path}: {reason}")]
    Malformed { path: PathBuf, reason: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ReviewQueue {
    pub fn new(items: Vec<ReadingItem>) -> Self {
        ReviewQueue {
            version: 1,
            entries: items
                .into_iter()
                .map(|item| QueueEntry {
                    original_passage: item.passage.clone(),
                    item,
                    decision: None,
                })
                .collect(),
            log: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self, ReviewError> {
        let text = read_to_string(path).map_err(|source| ReviewError::Io {
            path: path.into(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| ReviewError::Malformed {
            path: path.into(),
            reason: e.to_string(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<(), ReviewError> {
        let json = to_pretty_json(self).expect("queue serializes");
        write_atomic(path, json.as_bytes()).map_err(|source| ReviewError::Io {
            path: path.into(),
            source,
        })
    }

    pub fn pending(&self) -> impl Iterator<Item = &QueueEntry> {
        self.entries.iter().filter(|e| e.is_pending())
    }

    /// The queue with every decision undone and the log cleared.
    pub fn reset(&self) -> Self {
        let mut q = self.clone();
        for e in &mut q.entries {
            e.item.passage = e.original_passage.clone();
            e.decision = None;
        }
        q.log.clear();
        q
    }

    /// Accepted and edited items, in queue order.
    pub fn reviewed_items(&self) -> Vec<ReadingItem> {
        self.entries
            .iter()
            .filter(|e| matches!(e.decision.as_ref().map(|d| &d.verdict), Some(Verdict::Accept | Verdict::Edit { .. })))
            .map(|e| e.item.clone())
            .collect()
    }
}

/// Create and persist a queue for the given complete records.
pub fn review_open(records: &[TranscreationRecord], queue_path: &Path, force: bool) -> Result<ReviewQueue, ReviewError> {
    if queue_path.exists() && !force {
        return Err(ReviewError::QueueExists(queue_path.into()));
    }
    let items = records
        .iter()
        .map(|r| r.to_item().ok_or_else(|| ReviewError::IncompleteRecord(r.record_id.clone())))
        .collect::<Result<Vec<_>, _>>()?;
    if items.is_empty() {
        log::warn!("opening an empty review queue at {}", queue_path.display());
    }
    let queue = ReviewQueue::new(items);
    queue.save(queue_path)?;
    Ok(queue)
}

/// Record a decision for a pending entry and return the updated item.
pub fn review_apply(queue: &mut ReviewQueue, mut decision: ReviewDecision) -> Result<ReadingItem, ReviewError> {
    let entry = queue
        .entries
        .iter_mut()
        .find(|e| e.item.id == decision.item_id)
        .ok_or_else(|| ReviewError::UnknownItem(decision.item_id.clone()))?;
    if !entry.is_pending() {
        return Err(ReviewError::AlreadyDecided(decision.item_id.clone()));
    }
    if let Some(&index) = decision.unanswerable.iter().find(|&&i| i >= entry.item.questions.len()) {
        return Err(ReviewError::BadQuestionIndex {
            item: decision.item_id.clone(),
            index,
        });
    }
    decision.unanswerable.sort_unstable();
    decision.unanswerable.dedup();
    decision.added_word_count = 0;
    match &decision.verdict {
        Verdict::Accept => {}
        Verdict::Reject { reason } if reason.trim().is_empty() => return Err(ReviewError::MissingReason),
        Verdict::Reject { .. } => {}
        Verdict::Edit { new_passage } if new_passage.trim().is_empty() => return Err(ReviewError::EmptyPassage),
        Verdict::Edit { new_passage } => {
            decision.added_word_count = word_count(new_passage).saturating_sub(word_count(&entry.item.passage));
            entry.item.passage = new_passage.clone();
        }
    }
    entry.decision = Some(decision.clone());
    queue.log.push(decision);
    Ok(entry.item.clone())
}

/// Rebuild the queue state from its decision log.
pub fn replay(queue: &ReviewQueue) -> Result<ReviewQueue, ReviewError> {
    let mut fresh = queue.reset();
    for d in &queue.log {
        review_apply(&mut fresh, d.clone())?;
    }
    Ok(fresh)
}

/// Exclusive hold on a queue file; released on drop.
#[derive(Debug)]
pub struct QueueLock {
    path: PathBuf,
}

impl QueueLock {
    pub fn acquire(queue_path: &Path) -> Result<Self, ReviewError> {
        let mut name = queue_path.as_os_str().to_owned();
        name.push(".lock");
        let path = PathBuf::from(name);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(_) => Ok(QueueLock { path }),
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(ReviewError::Locked(queue_path.into())),
            Err(source) => Err(ReviewError::Io { path, source }),
        }
    }

    pub fn path(&self) -> &Path {
        &self.path
    }
}

impl Drop for QueueLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QAReport {
    pub total_questions: usize,
    pub flagged_unanswerable: usize,
    pub unanswerable_rate: f64,
    /// `unanswerable_rate` as a percentage, half-up to one decimal.
    pub rendered_rate: String,
    pub edited_passages: usize,
    pub rejected_passages: usize,
    pub mean_added_words: f64,
}

/// Percentage with one decimal, halves rounded up.
pub fn render_rate(rate: f64) -> String {
    let tenths = (rate * 1000.0 + 0.5 + 1e-9).floor();
    format!("{:.1}%", tenths / 10.0)
}

pub fn qa_report(queue: &ReviewQueue) -> Result<QAReport, ReviewError> {
    let pending = queue.pending().count();
    if pending > 0 {
        return Err(ReviewError::PendingEntries(pending));
    }
    let decisions = || queue.entries.iter().filter_map(|e| e.decision.as_ref());
    let total_questions: usize = queue.entries.iter().map(|e| e.item.questions.len()).sum();
    let flagged: usize = decisions().map(|d| d.unanswerable.len()).sum();
    let added: Vec<usize> = decisions()
        .filter(|d| matches!(d.verdict, Verdict::Edit { .. }))
        .map(|d| d.added_word_count)
        .collect();
    let rate = if total_questions == 0 {
        0.0
    } else {
        flagged as f64 / total_questions as f64
    };
    Ok(QAReport {
        total_questions,
        flagged_unanswerable: flagged,
        unanswerable_rate: rate,
        rendered_rate: render_rate(rate),
        edited_passages: added.len(),
        rejected_passages: decisions().filter(|d| matches!(d.verdict, Verdict::Reject { .. })).count(),
        mean_added_words: if added.is_empty() {
            0.0
        } else {
            added.iter().sum::<usize>() as f64 / added.len() as f64
        },
    })
}
