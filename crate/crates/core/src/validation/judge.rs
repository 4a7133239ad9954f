use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{BloomLevel, Question};
use crate::gateway::{CompletionRequest, Gateway, GatewayError, PromptTemplate, TemplateError};
use crate::pipeline::{PipelineConfig, TranscreationRecord};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub item_id: String,
    /// 0-based question index.
    pub question_idx: usize,
    pub source_bloom: BloomLevel,
    pub judged_bloom: BloomLevel,
    #[serde(rename = "match")]
    pub is_match: bool,
}

impl JudgeVerdict {
    pub fn new(item_id: impl Into<String>, question_idx: usize, source: BloomLevel, judged: BloomLevel) -> Self {
        JudgeVerdict {
            item_id: item_id.into(),
            question_idx,
            source_bloom: source,
            judged_bloom: judged,
            is_match: source == judged,
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum JudgeError {
    #[error("record {0} is not complete")]
    IncompleteRecord(String),
    #[error("record {record}: question {question}: reply {reply:?} is not a Bloom level")]
    InvalidBloomReply {
        record: String,
        question: usize,
        reply: String,
    },
    #[error("record {record}: {source}")]
    Gateway {
        record: String,
        #[source]
        source: GatewayError,
    },
    #[error(transparent)]
    Template(#[from] TemplateError),
}

/// Asks the model for the Bloom level of each transcreated question. The
/// judge sees the transcreated passage and question only, never the
/// source label.
pub struct Judge<'a> {
    pub gateway: &'a Gateway,
    pub template: &'a PromptTemplate,
    pub config: PipelineConfig,
}

fn render_options(q: &Question) -> String {
    q.options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{}. {}\n", (b'A' + i as u8) as char, o))
        .collect()
}

impl<'a> Judge<'a> {
    pub fn new(gateway: &'a Gateway, template: &'a PromptTemplate, config: PipelineConfig) -> Self {
        Judge {
            gateway,
            template,
            config,
        }
    }

    /// Verdicts for every question of a complete record, in question order.
    pub fn judge_bloom(&self, record: &TranscreationRecord) -> Result<Vec<JudgeVerdict>, JudgeError> {
        if !record.is_complete() || record.transcreated_passage.is_none() {
            return Err(JudgeError::IncompleteRecord(record.record_id.clone()));
        }
        (0..record.transcreated_questions.len())
            .map(|i| self.judge_question(record, i))
            .collect()
    }

    pub fn judge_question(&self, record: &TranscreationRecord, index: usize) -> Result<JudgeVerdict, JudgeError> {
        let passage = record
            .transcreated_passage
            .as_deref()
            .ok_or_else(|| JudgeError::IncompleteRecord(record.record_id.clone()))?;
        let q = &record.transcreated_questions[index];
        let source = q
            .bloom
            .or_else(|| record.question_blooms.get(index).copied())
            .ok_or_else(|| JudgeError::IncompleteRecord(record.record_id.clone()))?;
        let bindings = BTreeMap::from([
            ("passage", passage.to_string()),
            ("question", q.stem.clone()),
            ("options", render_options(q)),
        ]);
        let prompt = self.template.render(&bindings)?;
        let mut user = prompt.user.clone();
        let mut last = String::new();
        for _ in 0..=self.config.retry_budget {
            let request = CompletionRequest {
                step: "judge".into(),
                scope: vec![record.record_id.clone(), format!("q{}", index + 1)],
                system: prompt.system.clone(),
                user: user.clone(),
                temperature: self.config.temperature,
                seed: self.config.seed,
                max_output_tokens: self.config.max_output_tokens,
            };
            let reply = self
                .gateway
                .complete(&request)
                .map_err(|source| JudgeError::Gateway {
                    record: record.record_id.clone(),
                    source,
                })?
                .text;
            let label = reply
                .trim()
                .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*'))
                .trim_end_matches('.');
            if let Ok(judged) = label.parse::<BloomLevel>() {
                return Ok(JudgeVerdict::new(&record.record_id, index, source, judged));
            }
            user = format!(
                "{}\n\nYour previous reply {reply:?} is not a Bloom level. Reply with the level name only.",
                prompt.user
            );
            last = reply;
        }
        Err(JudgeError::InvalidBloomReply {
            record: record.record_id.clone(),
            question: index + 1,
            reply: last,
        })
    }
}
