use std::collections::BTreeMap;

use serde::Serialize;
use transcreate_core::corpus::{check_item_topics, load_items, save_items};
use transcreate_core::textmetrics::{corpus_summary, passage_report, CorpusSummary, PassageReport};

use super::{emit_json, validation_error, Env};
use crate::args::{AnalyzeArgs, IngestArgs};
use crate::exit::{CmdResult, Failure};

#[derive(Serialize)]
struct IngestSummary {
    items: usize,
    questions: usize,
    topics: BTreeMap<String, usize>,
}

pub fn ingest(env: &Env, args: IngestArgs) -> CmdResult {
    let items = load_items(&args.input)?;
    check_item_topics(&items, &env.taxonomy)?;
    let mut topics = BTreeMap::new();
    for item in &items {
        let key = item.source_topic.as_ref().map_or("unknown".to_string(), ToString::to_string);
        *topics.entry(key).or_insert(0) += 1;
    }
    if let Some(out) = &args.out {
        save_items(out, &items).map_err(Failure::usage)?;
    }
    emit_json(
        None,
        &IngestSummary {
            items: items.len(),
            questions: items.iter().map(|i| i.questions.len()).sum(),
            topics,
        },
    )
}

#[derive(Serialize)]
struct PassageEntry {
    id: String,
    #[serde(flatten)]
    report: PassageReport,
}

#[derive(Serialize)]
struct AnalyzeReport {
    passages: Vec<PassageEntry>,
    summary: CorpusSummary,
    rendered: BTreeMap<&'static str, String>,
}

pub fn analyze(args: AnalyzeArgs) -> CmdResult {
    let items = load_items(&args.input)?;
    let passages = items
        .iter()
        .map(|item| {
            passage_report(&item.passage)
                .map(|report| PassageEntry {
                    id: item.id.clone(),
                    report,
                })
                .map_err(|e| validation_error(format!("item {}: {e}", item.id)))
        })
        .collect::<CmdResult<Vec<_>>>()?;
    let reports: Vec<PassageReport> = passages.iter().map(|p| p.report.clone()).collect();
    let summary = corpus_summary(&reports).map_err(validation_error)?;
    let rendered = BTreeMap::from([
        ("word_count", summary.word_count.render()),
        ("ttr", summary.ttr.render()),
        ("fres", summary.fres.render()),
    ]);
    emit_json(
        args.out.as_deref(),
        &AnalyzeReport {
            passages,
            summary,
            rendered,
        },
    )
}
