//! Quality control after transcreation: blind Bloom judging, agreement
//! statistics, and the human answerability review.

mod agreement;
mod judge;
mod review;

pub use agreement::{agreement_from_confusion, agreement_report, AgreementError, AgreementReport, Kappa};
pub use judge::{Judge, JudgeError, JudgeVerdict};
pub use review::{
    qa_report, render_rate, replay, review_apply, review_open, QAReport, QueueEntry, QueueLock,
    ReviewDecision, ReviewError, ReviewQueue, Verdict,
};
