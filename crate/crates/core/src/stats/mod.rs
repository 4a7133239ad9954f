//! Experiment analysis: group splitting, scoring, exact rank tests and
//! Likert aggregation.

mod rank;
mod records;
mod report;
mod split;

pub use rank::{mann_whitney_u, wilcoxon_signed_rank, Method, SampleSize, Sides, StatTestResult};
pub use records::{
    key_for, likert_summary, score_test, AnswerKeys, Group, ImmsResponse, StudentRecord, Subscale, TestResult,
};
pub use report::{experiment_report, render_report, Comparison, ExperimentReport, GroupReport, ReportOptions};
pub use split::{balanced_split, balanced_split_heuristic, SplitResult, EXACT_SPLIT_LIMIT};

use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum StatsError {
    #[error("every paired difference is zero; the signed-rank test is undefined")]
    AllZeroDifferences,
    #[error("sample is empty")]
    EmptySample,
    #[error("paired samples differ in length ({0} vs {1})")]
    UnpairedSamples(usize, usize),
    #[error("{answers} answers for {questions} questions")]
    LengthMismatch { answers: usize, questions: usize },
    #[error("answer {answer} for question {question} is outside 0..=3")]
    InvalidAnswer { question: usize, answer: usize },
    #[error("group size {0} exceeds the exact search limit; use the heuristic")]
    TooLarge(usize),
    #[error("{students} students cannot form two groups of {group_size}")]
    SizeMismatch { students: usize, group_size: usize },
    #[error("duplicate student id {0:?}")]
    DuplicateId(String),
    #[error("no matching IMMS responses")]
    NoResponses,
    #[error("group {0} has no students")]
    EmptyGroup(Group),
    #[error("student {student}: no answers for test {test:?}")]
    MissingAnswers { student: String, test: String },
    #[error("no answer key for test {0:?}")]
    MissingKey(String),
    #[error("student {student}: invalid record: {reason}")]
    InvalidRecord { student: String, reason: String },
}
