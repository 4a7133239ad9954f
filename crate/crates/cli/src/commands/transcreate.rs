use std::collections::BTreeMap;

use rayon::prelude::*;
use transcreate_core::assign::{assign_topics, AssignmentMode, TopicAssignment};
use transcreate_core::corpus::{check_item_topics, load_items, load_profiles, TopicCode};
use transcreate_core::pipeline::{Pipeline, RecordStatus, TranscreationRecord};

use super::{emit_json, emit_jsonl, read_json, Env};
use crate::args::{Mode, TranscreateArgs};
use crate::exit::{CmdResult, Failure, OrExit, GATEWAY, USAGE, VALIDATION};

/// One unit of work: item index, target topic and student.
struct Job {
    item: usize,
    target: TopicCode,
    student: Option<String>,
}

pub fn thread_pool(jobs: usize) -> CmdResult<rayon::ThreadPool> {
    if jobs == 0 {
        return Err(Failure::usage("--jobs must be at least 1"));
    }
    rayon::ThreadPoolBuilder::new().num_threads(jobs).build().or_exit(USAGE)
}

pub fn run(env: &Env, args: TranscreateArgs) -> CmdResult {
    let items = load_items(&args.input)?;
    check_item_topics(&items, &env.taxonomy)?;
    let index: BTreeMap<&str, usize> = items.iter().enumerate().map(|(i, it)| (it.id.as_str(), i)).collect();

    let assignments: Option<Vec<TopicAssignment>> = if let Some(path) = &args.assignments {
        Some(read_json(path)?)
    } else if let Some(path) = &args.profiles {
        let profiles = load_profiles(path, &env.taxonomy)?;
        let mode = match args.mode {
            Mode::Interest => AssignmentMode::Interest,
            Mode::Random => AssignmentMode::Random,
        };
        Some(assign_topics(&profiles, &items, mode, env.config.rng_seed, &env.taxonomy).or_exit(VALIDATION)?)
    } else {
        None
    };

    let jobs: Vec<Job> = match (&assignments, &args.target) {
        (Some(list), _) => {
            let mut jobs = Vec::new();
            for a in list {
                for p in &a.passages {
                    let &item = index.get(p.source_item_id.as_str()).ok_or_else(|| {
                        Failure::invalid(format!("assignment for {} names unknown item {}", a.student_id, p.source_item_id))
                    })?;
                    env.taxonomy.require(&p.target_topic)?;
                    jobs.push(Job {
                        item,
                        target: p.target_topic.clone(),
                        student: Some(a.student_id.clone()),
                    });
                }
            }
            jobs
        }
        (None, Some(code)) => {
            let target = TopicCode::new(code).or_exit(USAGE)?;
            env.taxonomy.require(&target)?;
            (0..items.len())
                .map(|item| Job {
                    item,
                    target: target.clone(),
                    student: None,
                })
                .collect()
        }
        (None, None) => return Err(Failure::usage("one of --profiles, --assignments or --target is required")),
    };
    if let (Some(out), Some(list)) = (&args.assignments_out, &assignments) {
        emit_json(Some(out), list)?;
    }

    let gateway = env.gateway(&args.gateway)?;
    let pipeline = Pipeline::new(&gateway, &env.prompts, &env.taxonomy, &env.tagset, env.pipeline_config());
    let pool = thread_pool(args.gateway.jobs)?;

    let mut needed: Vec<usize> = jobs.iter().map(|j| j.item).collect();
    needed.sort_unstable();
    needed.dedup();
    let records: Vec<TranscreationRecord> = pool.install(|| {
        let analyses: BTreeMap<usize, _> = needed
            .par_iter()
            .map(|&i| (i, pipeline.analyze_source(&items[i])))
            .collect::<Vec<_>>()
            .into_iter()
            .collect();
        jobs.par_iter()
            .map(|j| pipeline.transcreate_analyzed(&analyses[&j.item], &j.target, j.student.as_deref()))
            .collect()
    });

    emit_jsonl(Some(&args.out), &records)?;
    let failed: Vec<&TranscreationRecord> = records.iter().filter(|r| !r.is_complete()).collect();
    log::info!(
        "{} records written to {} ({} complete, {} failed)",
        records.len(),
        args.out.display(),
        records.len() - failed.len(),
        failed.len()
    );
    if failed.is_empty() {
        return Ok(());
    }
    let mut gateway_failure = false;
    for r in &failed {
        if let RecordStatus::Failed { step, error, reason } = &r.status {
            eprintln!("{}: step {step} failed ({error}): {reason}", r.record_id);
            gateway_failure |= error == "Gateway";
        }
    }
    let code = if gateway_failure { GATEWAY } else { VALIDATION };
    Err(Failure::new(code, anyhow::anyhow!("{} of {} records failed", failed.len(), records.len())))
}
