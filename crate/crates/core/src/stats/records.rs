use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::StatsError;
use crate::corpus::{BloomLevel, ReadingItem, OPTION_COUNT};
use crate::textmetrics::MetricSummary;

/// Points awarded per correct answer.
pub const POINTS_PER_QUESTION: u32 = 5;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Group {
    A,
    B,
    #[default]
    #[serde(rename = "unassigned")]
    Unassigned,
}

impl fmt::Display for Group {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Group::A => "A",
            Group::B => "B",
            Group::Unassigned => "unassigned",
        })
    }
}

/// IMMS subscales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Subscale {
    Attention,
    Relevance,
    Confidence,
    Satisfaction,
}

impl std::str::FromStr for Subscale {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "attention" => Ok(Subscale::Attention),
            "relevance" => Ok(Subscale::Relevance),
            "confidence" => Ok(Subscale::Confidence),
            "satisfaction" => Ok(Subscale::Satisfaction),
            _ => Err(format!("unknown IMMS subscale {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImmsResponse {
    pub item_id: String,
    pub subscale: Subscale,
    /// 7-point Likert response.
    pub response: u8,
}

/// One student's data; every per-test map is keyed by test id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudentRecord {
    pub student_id: String,
    pub toefl: f64,
    #[serde(default)]
    pub group: Group,
    #[serde(default)]
    pub test_answers: BTreeMap<String, Vec<usize>>,
    #[serde(default)]
    pub turnaround_minutes: BTreeMap<String, f64>,
    #[serde(default)]
    pub imms: BTreeMap<String, Vec<ImmsResponse>>,
}

impl StudentRecord {
    pub fn validate(&self) -> Result<(), StatsError> {
        let bad = |reason: String| StatsError::InvalidRecord {
            student: self.student_id.clone(),
            reason,
        };
        for (test, answers) in &self.test_answers {
            if let Some(a) = answers.iter().find(|&&a| a >= OPTION_COUNT) {
                return Err(bad(format!("test {test}: answer {a} outside 0..=3")));
            }
        }
        for (test, responses) in &self.imms {
            if let Some(r) = responses.iter().find(|r| !(1..=7).contains(&r.response)) {
                return Err(bad(format!("test {test}: IMMS response {} outside 1..=7", r.response)));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TestResult {
    pub score: u32,
    pub correct: usize,
    pub total: usize,
    /// (correct, total) per level, for questions that carry a level.
    pub correct_by_bloom: BTreeMap<BloomLevel, (usize, usize)>,
}

/// Score an answer sheet against the key's questions in order.
pub fn score_test(answers: &[usize], key: &[ReadingItem]) -> Result<TestResult, StatsError> {
    let questions: Vec<_> = key.iter().flat_map(|i| &i.questions).collect();
    if answers.len() != questions.len() {
        return Err(StatsError::LengthMismatch {
            answers: answers.len(),
            questions: questions.len(),
        });
    }
    let mut correct = 0;
    let mut by_bloom: BTreeMap<BloomLevel, (usize, usize)> = BTreeMap::new();
    for (i, (&a, q)) in answers.iter().zip(&questions).enumerate() {
        if a >= OPTION_COUNT {
            return Err(StatsError::InvalidAnswer {
                question: i + 1,
                answer: a,
            });
        }
        let hit = a == q.answer_index;
        correct += usize::from(hit);
        if let Some(level) = q.bloom {
            let e = by_bloom.entry(level).or_default();
            e.0 += usize::from(hit);
            e.1 += 1;
        }
    }
    Ok(TestResult {
        score: POINTS_PER_QUESTION * correct as u32,
        correct,
        total: questions.len(),
        correct_by_bloom: by_bloom,
    })
}

/// Answer-key items per test id.
pub type AnswerKeys = BTreeMap<String, Vec<ReadingItem>>;

/// The key items that apply to `student`: shared items plus those whose
/// `metadata.student_id` names the student.
pub fn key_for(items: &[ReadingItem], student: &str) -> Vec<ReadingItem> {
    items
        .iter()
        .filter(|i| i.metadata.get("student_id").is_none_or(|s| s == student))
        .cloned()
        .collect()
}

/// Mean and sample std over per-student means of the matching responses.
pub fn likert_summary(
    records: &[StudentRecord],
    test_id: &str,
    subscale: Option<Subscale>,
) -> Result<MetricSummary, StatsError> {
    let means: Vec<f64> = records
        .iter()
        .filter_map(|r| student_mean(r, test_id, subscale))
        .collect();
    MetricSummary::of(&means).ok_or(StatsError::NoResponses)
}

pub(crate) fn student_mean(record: &StudentRecord, test_id: &str, subscale: Option<Subscale>) -> Option<f64> {
    let values: Vec<f64> = record
        .imms
        .get(test_id)?
        .iter()
        .filter(|r| subscale.is_none_or(|s| r.subscale == s))
        .map(|r| f64::from(r.response))
        .collect();
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}
