//! Splitting students into two equal groups with similar TOEFL scores.
//!
//! Candidates are ordered by (mean gap, |std_A − std_B|, sorted ids of A).
//! Students are sorted by id before searching, so the result does not
//! depend on input order.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::StatsError;

/// Largest group size searched exhaustively.
pub const EXACT_SPLIT_LIMIT: usize = 12;

const HEURISTIC_RESTARTS: usize = 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitResult {
    pub group_a: BTreeSet<String>,
    pub group_b: BTreeSet<String>,
    pub mean_gap: f64,
    pub mean_a: f64,
    pub mean_b: f64,
    pub std_a: f64,
    pub std_b: f64,
    /// True when found by exhaustive search.
    pub exact: bool,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let ss: f64 = values.map(|v| (v - mean).powi(2)).sum();
    let std = if n > 1.0 { (ss / (n - 1.0)).sqrt() } else { 0.0 };
    (mean, std)
}

struct Candidate {
    gap: f64,
    std_diff: f64,
    mean_a: f64,
    mean_b: f64,
    std_a: f64,
    std_b: f64,
}

fn evaluate(scores: &[f64], in_a: &[bool]) -> Candidate {
    let a = scores.iter().zip(in_a).filter(|(_, &f)| f).map(|(s, _)| *s);
    let b = scores.iter().zip(in_a).filter(|(_, &f)| !f).map(|(s, _)| *s);
    let (sum_a, sum_b) = (a.clone().sum::<f64>(), b.clone().sum::<f64>());
    let k = a.clone().count() as f64;
    let (mean_a, std_a) = mean_std(a);
    let (mean_b, std_b) = mean_std(b);
    Candidate {
        // equal group sizes, so this is the mean gap without rounding noise
        // from the two divisions
        gap: (sum_a - sum_b).abs() / k,
        std_diff: (std_a - std_b).abs(),
        mean_a,
        mean_b,
        std_a,
        std_b,
    }
}

/// Strictly better on (gap, std difference); ties on both are left to the
/// id-order rule.
fn better(c: &Candidate, best: &Candidate) -> bool {
    (c.gap, c.std_diff) < (best.gap, best.std_diff)
}

fn sorted_students(students: &[(String, f64)], group_size: usize) -> Result<Vec<(String, f64)>, StatsError> {
    if group_size == 0 || students.len() != 2 * group_size {
        return Err(StatsError::SizeMismatch {
            students: students.len(),
            group_size,
        });
    }
    let mut sorted = students.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    if let Some(w) = sorted.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(StatsError::DuplicateId(w[0].0.clone()));
    }
    Ok(sorted)
}

fn finish(sorted: &[(String, f64)], in_a: &[bool], c: Candidate, exact: bool) -> SplitResult {
    let pick = |want: bool| {
        sorted
            .iter()
            .zip(in_a)
            .filter(|(_, &f)| f == want)
            .map(|(s, _)| s.0.clone())
            .collect()
    };
    SplitResult {
        group_a: pick(true),
        group_b: pick(false),
        mean_gap: c.gap,
        mean_a: c.mean_a,
        mean_b: c.mean_b,
        std_a: c.std_a,
        std_b: c.std_b,
        exact,
    }
}

/// Exhaustive search over all C(2k, k) partitions.
pub fn balanced_split(students: &[(String, f64)], group_size: usize) -> Result<SplitResult, StatsError> {
    if group_size > EXACT_SPLIT_LIMIT {
        return Err(StatsError::TooLarge(group_size));
    }
    let sorted = sorted_students(students, group_size)?;
    let scores: Vec<f64> = sorted.iter().map(|s| s.1).collect();
    let n = scores.len();
    // Combinations in lexicographic index order, so the first strictly
    // best candidate also has the smallest id set for A.
    let mut idx: Vec<usize> = (0..group_size).collect();
    let mut in_a = vec![false; n];
    let mut best: Option<(Candidate, Vec<bool>)> = None;
    loop {
        in_a.iter_mut().for_each(|f| *f = false);
        idx.iter().for_each(|&i| in_a[i] = true);
        let c = evaluate(&scores, &in_a);
        if best.as_ref().is_none_or(|(b, _)| better(&c, b)) {
            best = Some((c, in_a.clone()));
        }
        let Some(pos) = (0..group_size).rev().find(|&p| idx[p] < n - group_size + p) else {
            break;
        };
        idx[pos] += 1;
        for p in pos + 1..group_size {
            idx[p] = idx[p - 1] + 1;
        }
    }
    let (c, flags) = best.expect("at least one partition");
    Ok(finish(&sorted, &flags, c, true))
}

/// Seeded greedy pair-swap search with random restarts, for groups too
/// large to enumerate.
pub fn balanced_split_heuristic(students: &[(String, f64)], group_size: usize, seed: u64) -> Result<SplitResult, StatsError> {
    let sorted = sorted_students(students, group_size)?;
    let scores: Vec<f64> = sorted.iter().map(|s| s.1).collect();
    let n = scores.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(Candidate, Vec<bool>)> = None;
    for _ in 0..HEURISTIC_RESTARTS {
        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut rng);
        let mut in_a = vec![false; n];
        order[..group_size].iter().for_each(|&i| in_a[i] = true);
        let mut current = evaluate(&scores, &in_a);
        loop {
            let mut step: Option<(Candidate, usize, usize)> = None;
            let members: Vec<usize> = (0..n).filter(|&i| in_a[i]).collect();
            let others: Vec<usize> = (0..n).filter(|&j| !in_a[j]).collect();
            for &i in &members {
                for &j in &others {
                    in_a.swap(i, j);
                    let c = evaluate(&scores, &in_a);
                    in_a.swap(i, j);
                    let target = step.as_ref().map_or(&current, |s| &s.0);
                    if better(&c, target) {
                        step = Some((c, i, j));
                    }
                }
            }
            match step {
                Some((c, i, j)) => {
                    in_a.swap(i, j);
                    current = c;
                }
                None => break,
            }
        }
        let improves = match &best {
            None => true,
            Some((b, flags)) => better(&current, b) || (!better(b, &current) && in_a_lex_less(&in_a, flags)),
        };
        if improves {
            best = Some((current, in_a));
        }
    }
    let (c, flags) = best.expect("at least one restart");
    Ok(finish(&sorted, &flags, c, false))
}

/// Whether A-set `x` precedes `y` in sorted-index lexicographic order.
fn in_a_lex_less(x: &[bool], y: &[bool]) -> bool {
    let ix = x.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i);
    let iy = y.iter().enumerate().filter(|(_, &f)| f).map(|(i, _)| i);
    ix.lt(iy)
}
