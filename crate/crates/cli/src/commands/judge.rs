use rayon::prelude::*;
use transcreate_core::pipeline::TranscreationRecord;
use transcreate_core::validation::{agreement_report, Judge, JudgeError, JudgeVerdict};

use super::transcreate::thread_pool;
use super::{emit_json, emit_jsonl, read_jsonl, Env};
use crate::args::JudgeArgs;
use crate::exit::{CmdResult, Failure, GATEWAY, VALIDATION};

pub fn run(env: &Env, args: JudgeArgs) -> CmdResult {
    let records: Vec<TranscreationRecord> = read_jsonl(&args.input)?;
    let incomplete: Vec<&str> = records
        .iter()
        .filter(|r| !r.is_complete())
        .map(|r| r.record_id.as_str())
        .collect();
    if !incomplete.is_empty() {
        for id in &incomplete {
            eprintln!("{id}: record is not complete");
        }
        return Err(Failure::invalid(format!("{} incomplete records cannot be judged", incomplete.len())));
    }

    let gateway = env.gateway(&args.gateway)?;
    let judge = Judge::new(&gateway, &env.prompts.judge, env.pipeline_config());
    let pool = thread_pool(args.gateway.jobs)?;
    let per_record: Vec<Result<Vec<JudgeVerdict>, JudgeError>> =
        pool.install(|| records.par_iter().map(|r| judge.judge_bloom(r)).collect());
    let mut verdicts = Vec::new();
    for result in per_record {
        match result {
            Ok(v) => verdicts.extend(v),
            Err(e @ JudgeError::Gateway { .. }) => return Err(Failure::new(GATEWAY, e)),
            Err(e) => return Err(Failure::new(VALIDATION, e)),
        }
    }
    if let Some(path) = &args.verdicts_out {
        emit_jsonl(Some(path), &verdicts)?;
    }
    let report = agreement_report(&verdicts).map_err(Failure::invalid)?;
    emit_json(args.out.as_deref(), &report)
}
