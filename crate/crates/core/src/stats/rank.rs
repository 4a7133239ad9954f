//! Wilcoxon signed-rank and Mann-Whitney U tests.
//!
//! Tied values get average ranks. Doubling every rank makes all rank sums
//! integers, so the exact null distributions are counted by dynamic
//! programming over doubled rank sums. A one-sided p-value is the smaller
//! tail probability of the observed rank sum; two-sided is twice that,
//! capped at 1.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::StatsError;

/// Largest number of non-zero differences tested exactly.
pub const EXACT_SIGNED_RANK_LIMIT: usize = 20;
/// Largest combined sample size tested exactly.
pub const EXACT_RANK_SUM_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sides {
    One,
    Two,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Exact,
    NormalApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "design", rename_all = "lowercase")]
pub enum SampleSize {
    /// `pairs` supplied, `nonzero` of them used.
    Paired { pairs: usize, nonzero: usize },
    Independent { a: usize, b: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatTestResult {
    pub statistic: f64,
    pub p_value: f64,
    pub method: Method,
    pub sides: Sides,
    pub n: SampleSize,
}

/// Average ranks (1-based) of `values`, plus the sizes of tie groups.
pub(crate) fn average_ranks(values: &[f64]) -> (Vec<f64>, Vec<usize>) {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut ties = Vec::new();
    let mut i = 0;
    while i < order.len() {
        let mut j = i + 1;
        while j < order.len() && values[order[j]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + 1 + j) as f64 / 2.0;
        for &k in &order[i..j] {
            ranks[k] = rank;
        }
        if j - i > 1 {
            ties.push(j - i);
        }
        i = j;
    }
    (ranks, ties)
}

fn tail_p(counts: &[f64], observed: usize, sides: Sides) -> f64 {
    let total: f64 = counts.iter().sum();
    let lower: f64 = counts[..=observed].iter().sum::<f64>() / total;
    let upper: f64 = counts[observed..].iter().sum::<f64>() / total;
    let one = lower.min(upper).min(1.0);
    match sides {
        Sides::One => one,
        Sides::Two => (2.0 * one).min(1.0),
    }
}

fn normal_p(z: f64, sides: Sides) -> f64 {
    let upper = 1.0 - Normal::standard().cdf(z.max(0.0));
    match sides {
        Sides::One => upper,
        Sides::Two => (2.0 * upper).min(1.0),
    }
}

fn tie_term(ties: &[usize]) -> f64 {
    ties.iter().map(|&t| (t * t * t - t) as f64).sum()
}

/// Signed-rank test on paired samples. Zero differences are dropped;
/// the statistic is W = min(W+, W−).
pub fn wilcoxon_signed_rank(x: &[f64], y: &[f64], sides: Sides) -> Result<StatTestResult, StatsError> {
    if x.len() != y.len() {
        return Err(StatsError::UnpairedSamples(x.len(), y.len()));
    }
    if x.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let diffs: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).filter(|d| *d != 0.0).collect();
    let m = diffs.len();
    if m == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    let abs: Vec<f64> = diffs.iter().map(|d| d.abs()).collect();
    let (ranks, ties) = average_ranks(&abs);
    let w_plus: f64 = diffs.iter().zip(&ranks).filter(|(d, _)| **d > 0.0).map(|(_, r)| r).sum();
    let total = (m * (m + 1)) as f64 / 2.0;
    let statistic = w_plus.min(total - w_plus);
    let n = SampleSize::Paired {
        pairs: x.len(),
        nonzero: m,
    };

    if m <= EXACT_SIGNED_RANK_LIMIT {
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![0.0f64; max + 1];
        counts[0] = 1.0;
        let mut reach = 0;
        for &r in &doubled {
            for s in (0..=reach).rev() {
                if counts[s] != 0.0 {
                    counts[s + r] += counts[s];
                }
            }
            reach += r;
        }
        let observed = (w_plus * 2.0).round() as usize;
        return Ok(StatTestResult {
            statistic,
            p_value: tail_p(&counts, observed, sides),
            method: Method::Exact,
            sides,
            n,
        });
    }

    let mf = m as f64;
    let mean = mf * (mf + 1.0) / 4.0;
    let var = mf * (mf + 1.0) * (2.0 * mf + 1.0) / 24.0 - tie_term(&ties) / 48.0;
    let p_value = if var <= 0.0 {
        1.0
    } else {
        normal_p(((w_plus - mean).abs() - 0.5) / var.sqrt(), sides)
    };
    Ok(StatTestResult {
        statistic,
        p_value,
        method: Method::NormalApprox,
        sides,
        n,
    })
}

/// Rank-sum test on independent samples; the statistic is
/// U = min(U_a, U_b).
pub fn mann_whitney_u(a: &[f64], b: &[f64], sides: Sides) -> Result<StatTestResult, StatsError> {
    if a.is_empty() || b.is_empty() {
        return Err(StatsError::EmptySample);
    }
    let (na, nb) = (a.len(), b.len());
    let all: Vec<f64> = a.iter().chain(b).copied().collect();
    let (ranks, ties) = average_ranks(&all);
    let r_a: f64 = ranks[..na].iter().sum();
    let u_a = r_a - (na * (na + 1)) as f64 / 2.0;
    let u_b = (na * nb) as f64 - u_a;
    let statistic = u_a.min(u_b);
    let n = SampleSize::Independent { a: na, b: nb };

    if na + nb <= EXACT_RANK_SUM_LIMIT {
        // counts[k][s]: subsets of size k with doubled rank sum s.
        let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
        let max: usize = doubled.iter().sum();
        let mut counts = vec![vec![0.0f64; max + 1]; na + 1];
        counts[0][0] = 1.0;
        let mut reach = 0;
        for &r in &doubled {
            for k in (0..na).rev() {
                for s in (0..=reach).rev() {
                    let c = counts[k][s];
                    if c != 0.0 {
                        counts[k + 1][s + r] += c;
                    }
                }
            }
            reach += r;
        }
        let observed = (r_a * 2.0).round() as usize;
        return Ok(StatTestResult {
            statistic,
            p_value: tail_p(&counts[na], observed, sides),
            method: Method::Exact,
            sides,
            n,
        });
    }

    let (fa, fb) = (na as f64, nb as f64);
    let big_n = fa + fb;
    let mean = fa * fb / 2.0;
    let var = fa * fb / 12.0 * ((big_n + 1.0) - tie_term(&ties) / (big_n * (big_n - 1.0)));
    let p_value = if var <= 0.0 {
        1.0
    } else {
        normal_p((u_a - mean).abs() / var.sqrt(), sides)
    };
    Ok(StatTestResult {
        statistic,
        p_value,
        method: Method::NormalApprox,
        sides,
        n,
    })
}
