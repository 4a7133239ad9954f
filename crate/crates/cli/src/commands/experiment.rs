use std::collections::BTreeMap;
use std::path::Path;

use serde::Serialize;
use transcreate_core::corpus::load_items;
use transcreate_core::stats::{
    balanced_split, balanced_split_heuristic, experiment_report, key_for, render_report, score_test, AnswerKeys,
    Group, ReportOptions, Sides, StatsError, StudentRecord, TestResult, EXACT_SPLIT_LIMIT,
};

use super::{emit, emit_json, read_json, Env};
use crate::args::{KeyArgs, ScoreArgs, SplitArgs, StatsArgs};
use crate::exit::{CmdResult, Failure};

fn stats_failure(e: StatsError) -> Failure {
    Failure::invalid(e)
}

fn load_students(path: &Path) -> CmdResult<Vec<StudentRecord>> {
    let students: Vec<StudentRecord> = read_json(path)?;
    for s in &students {
        s.validate().map_err(stats_failure)?;
    }
    Ok(students)
}

fn load_keys(args: &KeyArgs) -> CmdResult<AnswerKeys> {
    let mut keys = AnswerKeys::new();
    for spec in &args.keys {
        let (test, path) = spec
            .split_once('=')
            .ok_or_else(|| Failure::usage(format!("--key expects TEST=PATH, got {spec:?}")))?;
        if keys.insert(test.to_string(), load_items(Path::new(path))?).is_some() {
            return Err(Failure::usage(format!("test {test:?} given twice")));
        }
    }
    Ok(keys)
}

pub fn split(env: &Env, args: SplitArgs) -> CmdResult {
    let mut students = load_students(&args.students)?;
    let k = args.group_size.unwrap_or(students.len() / 2);
    let scores: Vec<(String, f64)> = students.iter().map(|s| (s.student_id.clone(), s.toefl)).collect();
    let result = if args.heuristic {
        balanced_split_heuristic(&scores, k, env.config.rng_seed)
    } else if k > EXACT_SPLIT_LIMIT {
        return Err(Failure::invalid(format!(
            "group size {k} exceeds the exact search limit of {EXACT_SPLIT_LIMIT}; pass --heuristic"
        )));
    } else {
        balanced_split(&scores, k)
    }
    .map_err(stats_failure)?;
    if let Some(path) = &args.assign_out {
        for s in &mut students {
            s.group = if result.group_a.contains(&s.student_id) { Group::A } else { Group::B };
        }
        emit_json(Some(path), &students)?;
    }
    emit_json(args.out.as_deref(), &result)
}

#[derive(Serialize)]
struct StudentScores {
    student_id: String,
    group: Group,
    tests: BTreeMap<String, TestResult>,
}

pub fn score(args: ScoreArgs) -> CmdResult {
    let students = load_students(&args.keys.students)?;
    let keys = load_keys(&args.keys)?;
    let mut out = Vec::with_capacity(students.len());
    for s in &students {
        let mut tests = BTreeMap::new();
        for (test, answers) in &s.test_answers {
            let Some(items) = keys.get(test) else {
                log::warn!("{}: no key for test {test:?}, skipped", s.student_id);
                continue;
            };
            let result = score_test(answers, &key_for(items, &s.student_id))
                .map_err(|e| Failure::invalid(format!("{} test {test}: {e}", s.student_id)))?;
            tests.insert(test.clone(), result);
        }
        out.push(StudentScores {
            student_id: s.student_id.clone(),
            group: s.group,
            tests,
        });
    }
    emit_json(args.out.as_deref(), &out)
}

pub fn stats(env: &Env, args: StatsArgs) -> CmdResult {
    let students = load_students(&args.keys.students)?;
    let keys = load_keys(&args.keys)?;
    let opts = ReportOptions {
        alpha: env.config.alpha,
        first_test: args.first_test.clone(),
        second_test: args.second_test.clone(),
        sides: if args.one_sided { Sides::One } else { Sides::Two },
    };
    let report = experiment_report(&students, &keys, &opts).map_err(stats_failure)?;
    emit_json(args.out.as_deref(), &report)?;
    let table = render_report(&report);
    match (&args.table, &args.out) {
        (Some(path), _) => emit(Some(path), &table),
        (None, Some(_)) => emit(None, &table),
        (None, None) => Ok(()),
    }
}
