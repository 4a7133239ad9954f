//! Interest-based transcreation of reading-comprehension items.
//!
//! The pieces, roughly in the order a study uses them:
//!
//! - [`corpus`] holds items, topics, tags and interest profiles.
//! - [`textmetrics`] measures readability and lexical diversity.
//! - [`assign`] picks a target topic per student and item.
//! - [`pipeline`] runs the model-backed rewrite through a [`gateway::Gateway`].
//! - [`validation`] covers the blind Bloom judge and the human review queue.
//! - [`stats`] splits classes and compares groups with rank tests.
//!
//! ```
//! use transcreate::textmetrics::passage_report;
//!
//! let r = passage_report("The cat sat.").unwrap();
//! assert_eq!(r.word_count, 3);
//! ```

pub mod assign;
pub mod corpus;
pub mod fixtures;
pub mod gateway;
pub mod io;
pub mod pipeline;
pub mod prompts;
pub mod stats;
pub mod tagging;
pub mod textmetrics;
pub mod validation;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/readability.md")]
    mod readability {}
    #[doc = include_str!("../../../book/src/markers.md")]
    mod markers {}
    #[doc = include_str!("../../../book/src/pipeline.md")]
    mod pipeline {}
    #[doc = include_str!("../../../book/src/gateway.md")]
    mod gateway {}
    #[doc = include_str!("../../../book/src/validation.md")]
    mod validation {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/walkthrough.md")]
    mod walkthrough {}
}
