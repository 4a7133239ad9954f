//! The five-step transcreation procedure.
//!
//! 1. topic extraction
//! 2. Bloom classification of every source question
//! 3. linguistic-feature tagging of the source passage
//! 4. passage transcreation into the target topic
//! 5. question transcreation
//!
//! Every model reply is validated. A reply that breaks its step's contract is
//! sent back with a corrective note, up to `retry_budget` times; gateway
//! errors end the step at once (the gateway has already retried them).
//! Steps 1–3 depend only on the source item, so [`Pipeline::analyze_source`]
//! runs them once and [`Pipeline::transcreate_analyzed`] can fan the result
//! out to many targets.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::corpus::{BloomLevel, Question, ReadingItem, TagSet, TopicCode, TopicTaxonomy, OPTION_COUNT};
use crate::gateway::{CompletionRequest, Gateway, GatewayError, PromptTemplate, TemplateError};
use crate::prompts::PromptSet;
use crate::tagging::{markers_in, strip_tags, TagError, TaggedPassage};
use crate::textmetrics::word_count;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Step {
    Topic = 1,
    Bloom = 2,
    Tagging = 3,
    Passage = 4,
    Questions = 5,
}

impl Step {
    pub fn number(self) -> u8 {
        self as u8
    }

    /// Name used for mock-script queues and request logs.
    pub fn name(self) -> &'static str {
        match self {
            Step::Topic => "topic",
            Step::Bloom => "bloom",
            Step::Tagging => "tagging",
            Step::Passage => "passage",
            Step::Questions => "questions",
        }
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum PipelineError {
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("reply {0:?} is not a topic code in the taxonomy")]
    InvalidTopicReply(String),
    #[error("reply {0:?} is not a Bloom level")]
    InvalidBloomReply(String),
    #[error(transparent)]
    Tag(#[from] TagError),
    #[error("markers {found:?} differ from the source markers {expected:?}")]
    TagMultisetMismatch {
        expected: BTreeMap<String, usize>,
        found: BTreeMap<String, usize>,
    },
    #[error("{words} words is outside {min}..={max} (source has {source_words})")]
    LengthViolation {
        source_words: usize,
        words: usize,
        min: usize,
        max: usize,
    },
    #[error("{}: {reason}", question.map_or("reply".to_string(), |q| format!("question {q}")))]
    StructureViolation {
        /// 1-based question number; `None` when the reply as a whole is wrong.
        question: Option<usize>,
        reason: String,
    },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Template(#[from] TemplateError),
}

impl PipelineError {
    /// Stable short name stored in failed records.
    pub fn kind(&self) -> &'static str {
        match self {
            PipelineError::Precondition(_) => "Precondition",
            PipelineError::InvalidTopicReply(_) => "InvalidTopicReply",
            PipelineError::InvalidBloomReply(_) => "InvalidBloomReply",
            PipelineError::Tag(TagError::RoundTripViolation) => "RoundTripViolation",
            PipelineError::Tag(TagError::UnknownTag(_)) => "UnknownTag",
            PipelineError::Tag(TagError::MisplacedTag { .. }) => "MisplacedTag",
            PipelineError::Tag(_) => "InvalidTagging",
            PipelineError::TagMultisetMismatch { .. } => "TagMultisetMismatch",
            PipelineError::LengthViolation { .. } => "LengthViolation",
            PipelineError::StructureViolation { .. } => "StructureViolation",
            PipelineError::Gateway(_) => "Gateway",
            PipelineError::Template(_) => "Template",
        }
    }

    pub fn is_gateway(&self) -> bool {
        matches!(self, PipelineError::Gateway(_))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Re-prompts allowed per step after the first reply.
    pub retry_budget: u32,
    /// Allowed relative deviation of the transcreated word count.
    pub length_envelope: f64,
    pub temperature: f64,
    pub seed: Option<u64>,
    pub max_output_tokens: u32,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            retry_budget: 3,
            length_envelope: 0.25,
            temperature: 0.0,
            seed: Some(0),
            max_output_tokens: 2048,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attempt {
    pub user: String,
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection: Option<String>,
}

/// All attempts of one model exchange within a step.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepExchange {
    pub step: u8,
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub system: String,
    pub attempts: Vec<Attempt>,
}

/// Outcome of the marker consistency check in step 4.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TagCheck {
    pub expected: BTreeMap<String, usize>,
    pub found: BTreeMap<String, usize>,
    pub equal: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PassageOutcome {
    /// Transcreated passage with markers removed.
    pub passage: String,
    /// The accepted reply, markers included.
    pub tagged: String,
    pub tag_check: TagCheck,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RecordStatus {
    Complete,
    Failed { step: u8, error: String, reason: String },
}

/// Provenance of one item transcreated for one target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscreationRecord {
    /// `item_id`, or `item_id@student_id` when made for a student.
    pub record_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub student_id: Option<String>,
    pub source: ReadingItem,
    pub extracted_topic: Option<TopicCode>,
    pub question_blooms: Vec<BloomLevel>,
    pub tagged_source: Option<TaggedPassage>,
    pub target_topic: TopicCode,
    pub topic_unchanged: bool,
    pub transcreated_passage: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transcreated_tagged: Option<String>,
    pub tag_check: Option<TagCheck>,
    pub transcreated_questions: Vec<Question>,
    pub step_exchanges: Vec<StepExchange>,
    pub status: RecordStatus,
}

impl TranscreationRecord {
    pub fn is_complete(&self) -> bool {
        self.status == RecordStatus::Complete
    }

    /// The transcreated item as a plain reading item (complete records only).
    pub fn to_item(&self) -> Option<ReadingItem> {
        let passage = self.transcreated_passage.clone()?;
        if !self.is_complete() {
            return None;
        }
        let mut metadata = self.source.metadata.clone();
        metadata.insert("source_id".into(), self.source.id.clone());
        if let Some(s) = &self.student_id {
            metadata.insert("student_id".into(), s.clone());
        }
        Some(ReadingItem {
            id: self.record_id.clone(),
            passage,
            questions: self.transcreated_questions.clone(),
            source_topic: Some(self.target_topic.clone()),
            metadata,
        })
    }
}

/// Steps 1–3 for one source item.
#[derive(Debug, Clone, PartialEq)]
pub struct SourceAnalysis {
    pub item: ReadingItem,
    pub extracted_topic: Option<TopicCode>,
    pub question_blooms: Vec<BloomLevel>,
    pub tagged_source: Option<TaggedPassage>,
    pub exchanges: Vec<StepExchange>,
    pub failure: Option<(Step, PipelineError)>,
}

pub struct Pipeline<'a> {
    pub gateway: &'a Gateway,
    pub prompts: &'a PromptSet,
    pub taxonomy: &'a TopicTaxonomy,
    pub tagset: &'a TagSet,
    pub config: PipelineConfig,
}

fn clean_label(reply: &str) -> &str {
    reply
        .trim()
        .trim_matches(|c: char| matches!(c, '"' | '\'' | '`' | '*'))
        .trim()
        .trim_end_matches('.')
}

fn letter(i: usize) -> char {
    (b'A' + i as u8) as char
}

fn render_options(q: &Question) -> String {
    q.options
        .iter()
        .enumerate()
        .map(|(i, o)| format!("{}. {}\n", letter(i), o))
        .collect()
}

fn strip_code_fence(reply: &str) -> &str {
    let t = reply.trim();
    let Some(body) = t.strip_prefix("```") else {
        return t;
    };
    let body = body.split_once('\n').map_or("", |(_, rest)| rest);
    body.trim_end().trim_end_matches("```").trim()
}

/// Parse a step-5 reply into questions carrying the given Bloom levels.
pub fn parse_question_reply(reply: &str, blooms: &[BloomLevel]) -> Result<Vec<Question>, PipelineError> {
    let whole = |reason: String| PipelineError::StructureViolation {
        question: None,
        reason,
    };
    let value: Value =
        serde_json::from_str(strip_code_fence(reply)).map_err(|e| whole(format!("not JSON: {e}")))?;
    let list = match &value {
        Value::Array(a) => a,
        Value::Object(o) => o
            .get("questions")
            .and_then(Value::as_array)
            .ok_or_else(|| whole("missing \"questions\" array".into()))?,
        _ => return Err(whole("expected an object or array".into())),
    };
    if list.len() != blooms.len() {
        return Err(whole(format!(
            "expected {} questions, got {}",
            blooms.len(),
            list.len()
        )));
    }
    list.iter()
        .zip(blooms)
        .enumerate()
        .map(|(i, (q, &bloom))| {
            let bad = |reason: &str| PipelineError::StructureViolation {
                question: Some(i + 1),
                reason: reason.to_string(),
            };
            let stem = q["stem"].as_str().ok_or_else(|| bad("missing stem"))?;
            let options: Vec<String> = q["options"]
                .as_array()
                .ok_or_else(|| bad("missing options"))?
                .iter()
                .map(|o| o.as_str().map(str::to_string).ok_or_else(|| bad("option is not a string")))
                .collect::<Result<_, _>>()?;
            let answer = q["answer"].as_str().ok_or_else(|| bad("missing answer letter"))?;
            let answer = answer.trim().trim_end_matches('.').trim_end_matches(')');
            let mut chars = answer.chars();
            let answer_index = match (chars.next(), chars.next()) {
                (Some(c), None) if c.is_ascii_alphabetic() => {
                    (c.to_ascii_uppercase() as u8 - b'A') as usize
                }
                _ => return Err(bad("answer must be a single letter")),
            };
            if options.len() != OPTION_COUNT {
                return Err(bad("expected 4 options"));
            }
            let question = Question {
                stem: stem.to_string(),
                options,
                answer_index,
                bloom: Some(bloom),
            };
            question.validate().map_err(|r| bad(&r))?;
            Ok(question)
        })
        .collect()
}

impl<'a> Pipeline<'a> {
    pub fn new(
        gateway: &'a Gateway,
        prompts: &'a PromptSet,
        taxonomy: &'a TopicTaxonomy,
        tagset: &'a TagSet,
        config: PipelineConfig,
    ) -> Self {
        Pipeline {
            gateway,
            prompts,
            taxonomy,
            tagset,
            config,
        }
    }

    fn topic_text(&self, code: &TopicCode) -> String {
        match self.taxonomy.get(code) {
            Some(sub) => format!("{code} ({})", sub.description),
            None => code.to_string(),
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn ask<T>(
        &self,
        step: Step,
        label: Option<String>,
        scope: &[&str],
        template: &PromptTemplate,
        bindings: BTreeMap<&str, String>,
        exchanges: &mut Vec<StepExchange>,
        mut check: impl FnMut(&str) -> Result<T, PipelineError>,
    ) -> Result<T, PipelineError> {
        let prompt = template.render(&bindings)?;
        let mut exchange = StepExchange {
            step: step.number(),
            name: step.name().to_string(),
            label,
            system: prompt.system.clone(),
            attempts: Vec::new(),
        };
        let mut user = prompt.user.clone();
        let mut last = None;
        for _ in 0..=self.config.retry_budget {
            let request = CompletionRequest {
                step: step.name().to_string(),
                scope: scope.iter().map(|s| s.to_string()).collect(),
                system: prompt.system.clone(),
                user: user.clone(),
                temperature: self.config.temperature,
                seed: self.config.seed,
                max_output_tokens: self.config.max_output_tokens,
            };
            let reply = match self.gateway.complete(&request) {
                Ok(c) => c.text,
                Err(e) => {
                    exchange.attempts.push(Attempt {
                        user,
                        response: None,
                        rejection: Some(e.to_string()),
                    });
                    exchanges.push(exchange);
                    return Err(e.into());
                }
            };
            match check(&reply) {
                Ok(v) => {
                    exchange.attempts.push(Attempt {
                        user,
                        response: Some(reply),
                        rejection: None,
                    });
                    exchanges.push(exchange);
                    return Ok(v);
                }
                Err(violation) => {
                    log::debug!("{} reply rejected: {violation}", step.name());
                    exchange.attempts.push(Attempt {
                        user,
                        response: Some(reply),
                        rejection: Some(violation.to_string()),
                    });
                    user = format!(
                        "{}\n\nYour previous reply was rejected: {violation}. Reply again and follow the required format exactly.",
                        prompt.user
                    );
                    last = Some(violation);
                }
            }
        }
        exchanges.push(exchange);
        Err(last.expect("at least one attempt"))
    }

    /// Step 1.
    pub fn extract_topic(
        &self,
        item: &ReadingItem,
        exchanges: &mut Vec<StepExchange>,
    ) -> Result<TopicCode, PipelineError> {
        if item.passage.trim().is_empty() {
            return Err(PipelineError::Precondition("empty passage".into()));
        }
        let bindings = BTreeMap::from([
            ("taxonomy", self.taxonomy.render_listing()),
            ("passage", item.passage.clone()),
        ]);
        self.ask(Step::Topic, None, &[item.id.as_str()], &self.prompts.topic, bindings, exchanges, |reply| {
            TopicCode::new(clean_label(reply))
                .ok()
                .filter(|c| self.taxonomy.contains(c))
                .ok_or_else(|| PipelineError::InvalidTopicReply(reply.to_string()))
        })
    }

    /// Step 2, for one question.
    pub fn classify_question(
        &self,
        item: &ReadingItem,
        index: usize,
        exchanges: &mut Vec<StepExchange>,
    ) -> Result<BloomLevel, PipelineError> {
        let q = item
            .questions
            .get(index)
            .ok_or_else(|| PipelineError::Precondition(format!("no question {}", index + 1)))?;
        let label = format!("q{}", index + 1);
        let bindings = BTreeMap::from([
            ("passage", item.passage.clone()),
            ("question", q.stem.clone()),
            ("options", render_options(q)),
        ]);
        self.ask(
            Step::Bloom,
            Some(label.clone()),
            &[item.id.as_str(), label.as_str()],
            &self.prompts.bloom,
            bindings,
            exchanges,
            |reply| {
                clean_label(reply)
                    .parse::<BloomLevel>()
                    .map_err(|_| PipelineError::InvalidBloomReply(reply.to_string()))
            },
        )
    }

    /// Step 3.
    pub fn tag_features(
        &self,
        item: &ReadingItem,
        exchanges: &mut Vec<StepExchange>,
    ) -> Result<TaggedPassage, PipelineError> {
        let questions: String = item
            .questions
            .iter()
            .enumerate()
            .map(|(i, q)| format!("{}. {}\n", i + 1, q.stem))
            .collect();
        let bindings = BTreeMap::from([
            ("tagset", self.tagset.render_listing()),
            ("passage", item.passage.clone()),
            ("questions", questions),
        ]);
        self.ask(Step::Tagging, None, &[item.id.as_str()], &self.prompts.tagging, bindings, exchanges, |reply| {
            Ok(TaggedPassage::from_reply(&item.passage, reply, self.tagset)?)
        })
    }

    /// Accept range for a transcreated passage's word count.
    pub fn length_bounds(&self, source_words: usize) -> (usize, usize) {
        let s = source_words as f64;
        let env = self.config.length_envelope;
        let min = (s * (1.0 - env) - 1e-9).ceil().max(0.0) as usize;
        let max = (s * (1.0 + env) + 1e-9).floor() as usize;
        (min, max)
    }

    /// Step 4.
    pub fn transcreate_passage(
        &self,
        scope: &[&str],
        tagged: &TaggedPassage,
        source_topic: &TopicCode,
        target_topic: &TopicCode,
        exchanges: &mut Vec<StepExchange>,
    ) -> Result<PassageOutcome, PipelineError> {
        if !self.taxonomy.contains(target_topic) {
            return Err(PipelineError::Precondition(format!(
                "target topic {target_topic} not in taxonomy"
            )));
        }
        let expected = tagged.multiset();
        let source_words = word_count(&tagged.original);
        let (min, max) = self.length_bounds(source_words);
        let bindings = BTreeMap::from([
            ("source_topic", self.topic_text(source_topic)),
            ("target_topic", self.topic_text(target_topic)),
            ("tagged_passage", tagged.render()),
            ("word_count", source_words.to_string()),
            ("min_words", min.to_string()),
            ("max_words", max.to_string()),
        ]);
        self.ask(Step::Passage, None, scope, &self.prompts.passage, bindings, exchanges, |reply| {
            let found = markers_in(reply);
            if found != expected {
                return Err(PipelineError::TagMultisetMismatch {
                    expected: expected.clone(),
                    found,
                });
            }
            let passage = strip_tags(reply).trim().to_string();
            let words = word_count(&passage);
            if words < min || words > max {
                return Err(PipelineError::LengthViolation {
                    source_words,
                    words,
                    min,
                    max,
                });
            }
            Ok(PassageOutcome {
                passage,
                tagged: reply.trim().to_string(),
                tag_check: TagCheck {
                    expected: expected.clone(),
                    found,
                    equal: true,
                },
            })
        })
    }

    /// Step 5. Bloom levels are copied positionally from `blooms`.
    pub fn transcreate_questions(
        &self,
        scope: &[&str],
        source_questions: &[Question],
        blooms: &[BloomLevel],
        passage: &str,
        target_topic: &TopicCode,
        exchanges: &mut Vec<StepExchange>,
    ) -> Result<Vec<Question>, PipelineError> {
        if source_questions.len() != blooms.len() {
            return Err(PipelineError::Precondition(
                "one Bloom level per source question required".into(),
            ));
        }
        let listing: Vec<Value> = source_questions
            .iter()
            .zip(blooms)
            .map(|(q, b)| {
                json!({
                    "stem": q.stem,
                    "options": q.options,
                    "answer": letter(q.answer_index).to_string(),
                    "bloom": b.name(),
                })
            })
            .collect();
        let bindings = BTreeMap::from([
            ("target_topic", self.topic_text(target_topic)),
            ("passage", passage.to_string()),
            (
                "questions_json",
                serde_json::to_string_pretty(&listing).expect("json"),
            ),
            ("question_count", source_questions.len().to_string()),
        ]);
        self.ask(Step::Questions, None, scope, &self.prompts.questions, bindings, exchanges, |reply| {
            parse_question_reply(reply, blooms)
        })
    }

    /// Steps 1–3.
    pub fn analyze_source(&self, item: &ReadingItem) -> SourceAnalysis {
        let mut a = SourceAnalysis {
            item: item.clone(),
            extracted_topic: None,
            question_blooms: Vec::new(),
            tagged_source: None,
            exchanges: Vec::new(),
            failure: None,
        };
        if let Err(reason) = item.validate() {
            a.failure = Some((Step::Topic, PipelineError::Precondition(reason)));
            return a;
        }
        match self.extract_topic(item, &mut a.exchanges) {
            Ok(t) => a.extracted_topic = Some(t),
            Err(e) => {
                a.failure = Some((Step::Topic, e));
                return a;
            }
        }
        for i in 0..item.questions.len() {
            match self.classify_question(item, i, &mut a.exchanges) {
                Ok(b) => a.question_blooms.push(b),
                Err(e) => {
                    a.failure = Some((Step::Bloom, e));
                    return a;
                }
            }
        }
        match self.tag_features(item, &mut a.exchanges) {
            Ok(t) => a.tagged_source = Some(t),
            Err(e) => a.failure = Some((Step::Tagging, e)),
        }
        a
    }

    /// Steps 4–5 on top of a finished analysis.
    pub fn transcreate_analyzed(
        &self,
        analysis: &SourceAnalysis,
        target_topic: &TopicCode,
        student_id: Option<&str>,
    ) -> TranscreationRecord {
        let item = &analysis.item;
        let record_id = match student_id {
            Some(s) => format!("{}@{s}", item.id),
            None => item.id.clone(),
        };
        let mut record = TranscreationRecord {
            record_id,
            student_id: student_id.map(str::to_string),
            source: item.clone(),
            extracted_topic: analysis.extracted_topic.clone(),
            question_blooms: analysis.question_blooms.clone(),
            tagged_source: analysis.tagged_source.clone(),
            target_topic: target_topic.clone(),
            topic_unchanged: analysis.extracted_topic.as_ref() == Some(target_topic),
            transcreated_passage: None,
            transcreated_tagged: None,
            tag_check: None,
            transcreated_questions: Vec::new(),
            step_exchanges: analysis.exchanges.clone(),
            status: RecordStatus::Complete,
        };
        let fail = |record: &mut TranscreationRecord, step: Step, e: &PipelineError| {
            record.status = RecordStatus::Failed {
                step: step.number(),
                error: e.kind().to_string(),
                reason: e.to_string(),
            };
        };
        if let Some((step, e)) = &analysis.failure {
            fail(&mut record, *step, e);
            return record;
        }
        let (Some(source_topic), Some(tagged)) = (&analysis.extracted_topic, &analysis.tagged_source)
        else {
            unreachable!("analysis without failure has topic and tags");
        };
        if record.topic_unchanged {
            log::info!("{}: target topic equals the extracted topic", record.record_id);
        }
        let scope: Vec<&str> = std::iter::once(item.id.as_str()).chain(student_id).collect();
        let outcome = match self.transcreate_passage(
            &scope,
            tagged,
            source_topic,
            target_topic,
            &mut record.step_exchanges,
        ) {
            Ok(o) => o,
            Err(e) => {
                fail(&mut record, Step::Passage, &e);
                return record;
            }
        };
        record.transcreated_passage = Some(outcome.passage.clone());
        record.transcreated_tagged = Some(outcome.tagged);
        record.tag_check = Some(outcome.tag_check);
        match self.transcreate_questions(
            &scope,
            &item.questions,
            &analysis.question_blooms,
            &outcome.passage,
            target_topic,
            &mut record.step_exchanges,
        ) {
            Ok(qs) => record.transcreated_questions = qs,
            Err(e) => fail(&mut record, Step::Questions, &e),
        }
        record
    }

    /// All five steps for one item and target.
    pub fn transcreate_item(
        &self,
        item: &ReadingItem,
        target_topic: &TopicCode,
        student_id: Option<&str>,
    ) -> TranscreationRecord {
        let analysis = self.analyze_source(item);
        self.transcreate_analyzed(&analysis, target_topic, student_id)
    }
}
