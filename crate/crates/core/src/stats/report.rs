//! The two-group, two-test experiment report.
//!
//! Scores, per-level correct counts and turnaround times are compared within
//! each group from the first test to the second with the signed-rank test.
//! Changes in IMMS means are compared between groups with the rank-sum
//! test, as are score changes.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use super::records::{key_for, score_test, student_mean, AnswerKeys, Group, StudentRecord, Subscale, TestResult};
use super::{mann_whitney_u, wilcoxon_signed_rank, Sides, StatTestResult, StatsError};
use crate::corpus::BloomLevel;
use crate::textmetrics::MetricSummary;

pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportOptions {
    pub alpha: f64,
    pub first_test: String,
    pub second_test: String,
    pub sides: Sides,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions {
            alpha: DEFAULT_ALPHA,
            first_test: "test1".into(),
            second_test: "test2".into(),
            sides: Sides::Two,
        }
    }
}

/// One significance test with its verdict at the report's alpha.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub p_value: f64,
    pub significant: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub test: Option<StatTestResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Comparison {
    fn from_result(result: Result<StatTestResult, StatsError>, alpha: f64) -> Result<Self, StatsError> {
        match result {
            Ok(t) => Ok(Comparison {
                p_value: t.p_value,
                significant: t.p_value < alpha,
                test: Some(t),
                note: None,
            }),
            Err(StatsError::AllZeroDifferences) => Ok(Comparison {
                p_value: 1.0,
                significant: false,
                test: None,
                note: Some("all differences are zero".into()),
            }),
            Err(e) => Err(e),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub group: Group,
    pub n: usize,
    /// Scores on the first and second test.
    pub scores: [MetricSummary; 2],
    pub score_delta: MetricSummary,
    pub score_change: Comparison,
    /// Change in correct answers per Bloom level.
    pub bloom_deltas: BTreeMap<BloomLevel, MetricSummary>,
    pub bloom_changes: BTreeMap<BloomLevel, Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turnaround: Option<[MetricSummary; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub turnaround_change: Option<Comparison>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imms: Option<[MetricSummary; 2]>,
    pub imms_by_subscale: BTreeMap<Subscale, [Option<MetricSummary>; 2]>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub alpha: f64,
    pub tests: [String; 2],
    pub sides: Sides,
    pub groups: Vec<GroupReport>,
    /// Group A vs group B on per-student score change.
    pub score_gain_between_groups: Comparison,
    /// Group A vs group B on per-student change in mean IMMS response.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imms_retention_between_groups: Option<Comparison>,
}

struct Scored<'a> {
    record: &'a StudentRecord,
    results: [TestResult; 2],
}

fn score_student<'a>(record: &'a StudentRecord, keys: &AnswerKeys, tests: &[&str; 2]) -> Result<Scored<'a>, StatsError> {
    record.validate()?;
    let mut results = Vec::with_capacity(2);
    for test in tests {
        let items = keys.get(*test).ok_or_else(|| StatsError::MissingKey(test.to_string()))?;
        let answers = record.test_answers.get(*test).ok_or_else(|| StatsError::MissingAnswers {
            student: record.student_id.clone(),
            test: test.to_string(),
        })?;
        results.push(score_test(answers, &key_for(items, &record.student_id))?);
    }
    let [a, b]: [TestResult; 2] = results.try_into().expect("two tests");
    Ok(Scored { record, results: [a, b] })
}

fn summary(values: &[f64]) -> MetricSummary {
    MetricSummary::of(values).expect("non-empty group")
}

fn group_report(group: Group, members: &[Scored], tests: &[&str; 2], opts: &ReportOptions) -> Result<GroupReport, StatsError> {
    let alpha = opts.alpha;
    let score = |k: usize| members.iter().map(|m| f64::from(m.results[k].score)).collect::<Vec<_>>();
    let (first, second) = (score(0), score(1));
    let deltas: Vec<f64> = second.iter().zip(&first).map(|(b, a)| b - a).collect();

    let mut bloom_deltas = BTreeMap::new();
    let mut bloom_changes = BTreeMap::new();
    for level in BloomLevel::ALL {
        let pairs: Vec<(f64, f64)> = members
            .iter()
            .filter_map(|m| {
                let a = m.results[0].correct_by_bloom.get(&level)?;
                let b = m.results[1].correct_by_bloom.get(&level)?;
                Some((a.0 as f64, b.0 as f64))
            })
            .collect();
        if pairs.is_empty() {
            continue;
        }
        let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        let d: Vec<f64> = b.iter().zip(&a).map(|(y, x)| y - x).collect();
        bloom_deltas.insert(level, summary(&d));
        bloom_changes.insert(level, Comparison::from_result(wilcoxon_signed_rank(&b, &a, opts.sides), alpha)?);
    }

    let times: Option<Vec<(f64, f64)>> = members
        .iter()
        .map(|m| {
            let t = &m.record.turnaround_minutes;
            Some((*t.get(tests[0])?, *t.get(tests[1])?))
        })
        .collect();
    let (turnaround, turnaround_change) = match times {
        Some(pairs) => {
            let (a, b): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            (
                Some([summary(&a), summary(&b)]),
                Some(Comparison::from_result(wilcoxon_signed_rank(&b, &a, opts.sides), alpha)?),
            )
        }
        None => (None, None),
    };

    let records: Vec<StudentRecord> = members.iter().map(|m| m.record.clone()).collect();
    let imms_for = |test: &str, sub: Option<Subscale>| super::likert_summary(&records, test, sub).ok();
    let imms = match (imms_for(tests[0], None), imms_for(tests[1], None)) {
        (Some(a), Some(b)) => Some([a, b]),
        _ => None,
    };
    let imms_by_subscale = [Subscale::Attention, Subscale::Relevance, Subscale::Confidence, Subscale::Satisfaction]
        .into_iter()
        .map(|s| (s, [imms_for(tests[0], Some(s)), imms_for(tests[1], Some(s))]))
        .filter(|(_, v)| v.iter().any(Option::is_some))
        .collect();

    Ok(GroupReport {
        group,
        n: members.len(),
        scores: [summary(&first), summary(&second)],
        score_delta: summary(&deltas),
        score_change: Comparison::from_result(wilcoxon_signed_rank(&second, &first, opts.sides), alpha)?,
        bloom_deltas,
        bloom_changes,
        turnaround,
        turnaround_change,
        imms,
        imms_by_subscale,
    })
}

pub fn experiment_report(
    records: &[StudentRecord],
    keys: &AnswerKeys,
    opts: &ReportOptions,
) -> Result<ExperimentReport, StatsError> {
    let tests = [opts.first_test.as_str(), opts.second_test.as_str()];
    let unassigned = records.iter().filter(|r| r.group == Group::Unassigned).count();
    if unassigned > 0 {
        log::warn!("{unassigned} students without a group are left out of the report");
    }
    let mut groups = Vec::new();
    let mut members_by_group = Vec::new();
    for group in [Group::A, Group::B] {
        let members = records
            .iter()
            .filter(|r| r.group == group)
            .map(|r| score_student(r, keys, &tests))
            .collect::<Result<Vec<_>, _>>()?;
        if members.is_empty() {
            return Err(StatsError::EmptyGroup(group));
        }
        groups.push(group_report(group, &members, &tests, opts)?);
        members_by_group.push(members);
    }

    let gains = |ms: &[Scored]| -> Vec<f64> {
        ms.iter()
            .map(|m| f64::from(m.results[1].score) - f64::from(m.results[0].score))
            .collect()
    };
    let score_gain_between_groups = Comparison::from_result(
        mann_whitney_u(&gains(&members_by_group[0]), &gains(&members_by_group[1]), opts.sides),
        opts.alpha,
    )?;

    let retention = |ms: &[Scored]| -> Vec<f64> {
        ms.iter()
            .filter_map(|m| Some(student_mean(m.record, tests[1], None)? - student_mean(m.record, tests[0], None)?))
            .collect()
    };
    let (ra, rb) = (retention(&members_by_group[0]), retention(&members_by_group[1]));
    let imms_retention_between_groups = if ra.is_empty() || rb.is_empty() {
        None
    } else {
        Some(Comparison::from_result(mann_whitney_u(&ra, &rb, opts.sides), opts.alpha)?)
    };

    Ok(ExperimentReport {
        alpha: opts.alpha,
        tests: [opts.first_test.clone(), opts.second_test.clone()],
        sides: opts.sides,
        groups,
        score_gain_between_groups,
        imms_retention_between_groups,
    })
}

fn p_cell(c: &Comparison) -> String {
    format!("p = {:.4}{}", c.p_value, if c.significant { " *" } else { "" })
}

/// A plain-text table of the report; `*` marks p < alpha.
pub fn render_report(report: &ExperimentReport) -> String {
    let [t1, t2] = &report.tests;
    let mut rows: Vec<(String, Vec<String>)> = Vec::new();
    let per_group = |f: &dyn Fn(&GroupReport) -> String| report.groups.iter().map(f).collect::<Vec<_>>();
    let fmt_opt = |s: Option<&MetricSummary>| s.map_or("-".to_string(), MetricSummary::render);

    rows.push(("n".into(), per_group(&|g| g.n.to_string())));
    rows.push((format!("score {t1}"), per_group(&|g| g.scores[0].render())));
    rows.push((format!("score {t2}"), per_group(&|g| g.scores[1].render())));
    rows.push(("score change".into(), per_group(&|g| g.score_delta.render())));
    rows.push(("  signed-rank".into(), per_group(&|g| p_cell(&g.score_change))));
    for level in BloomLevel::ALL {
        if report.groups.iter().any(|g| g.bloom_deltas.contains_key(&level)) {
            rows.push((
                format!("{level} change"),
                per_group(&|g| fmt_opt(g.bloom_deltas.get(&level))),
            ));
        }
    }
    if report.groups.iter().any(|g| g.turnaround.is_some()) {
        rows.push((format!("minutes {t1}"), per_group(&|g| fmt_opt(g.turnaround.as_ref().map(|t| &t[0])))));
        rows.push((format!("minutes {t2}"), per_group(&|g| fmt_opt(g.turnaround.as_ref().map(|t| &t[1])))));
        rows.push((
            "  signed-rank".into(),
            per_group(&|g| g.turnaround_change.as_ref().map_or("-".into(), p_cell)),
        ));
    }
    if report.groups.iter().any(|g| g.imms.is_some()) {
        rows.push((format!("IMMS {t1}"), per_group(&|g| fmt_opt(g.imms.as_ref().map(|t| &t[0])))));
        rows.push((format!("IMMS {t2}"), per_group(&|g| fmt_opt(g.imms.as_ref().map(|t| &t[1])))));
        for s in [Subscale::Attention, Subscale::Relevance, Subscale::Confidence, Subscale::Satisfaction] {
            if report.groups.iter().any(|g| g.imms_by_subscale.contains_key(&s)) {
                for (k, t) in [t1, t2].iter().enumerate() {
                    rows.push((
                        format!("  {s:?} {t}"),
                        per_group(&|g| fmt_opt(g.imms_by_subscale.get(&s).and_then(|v| v[k].as_ref()))),
                    ));
                }
            }
        }
    }

    let label_w = rows.iter().map(|r| r.0.chars().count()).max().unwrap_or(0).max(5);
    let col_w = rows
        .iter()
        .flat_map(|r| r.1.iter().map(|c| c.chars().count()))
        .max()
        .unwrap_or(0)
        .max(8);
    let mut out = String::new();
    let sides = match report.sides {
        Sides::One => "one-sided",
        Sides::Two => "two-sided",
    };
    let _ = writeln!(out, "Experiment report (alpha = {}, {sides})", report.alpha);
    let header: Vec<String> = report.groups.iter().map(|g| format!("Group {}", g.group)).collect();
    let _ = writeln!(out, "{:label_w$}  {}", "", pad(&header, col_w));
    for (label, cells) in &rows {
        let _ = writeln!(out, "{label:label_w$}  {}", pad(cells, col_w));
    }
    let _ = writeln!(out, "score change, A vs B (rank-sum): {}", p_cell(&report.score_gain_between_groups));
    if let Some(c) = &report.imms_retention_between_groups {
        let _ = writeln!(out, "IMMS change, A vs B (rank-sum): {}", p_cell(c));
    }
    out
}

fn pad(cells: &[String], width: usize) -> String {
    cells
        .iter()
        .map(|c| format!("{c:width$}"))
        .collect::<Vec<_>>()
        .join("  ")
        .trim_end()
        .to_string()
}
