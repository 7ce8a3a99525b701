//! Hypothesis tests for corpus-level comparisons.
//!
//! Pearson's chi-squared test on contingency tables and the Wilcoxon
//! signed-rank test on paired samples, with a Bonferroni threshold for
//! families of tests. The distribution tails are computed here from the
//! regularized incomplete gamma function.

mod special;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use special::{chi_squared_sf, erfc, gamma_p, gamma_q, ln_gamma, normal_sf};

/// Family-wise significance level before correction.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Largest number of non-zero differences tested by exact enumeration.
pub const EXACT_MAX_N: usize = 20;
/// Fewest non-zero differences accepted by the signed-rank test.
pub const MIN_PAIRS: usize = 5;
/// p-values below this are reported as a bound.
pub const P_FLOOR: f64 = 1e-300;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("degenerate contingency table: {0}")]
    DegenerateTable(String),
    #[error("every paired difference is zero")]
    AllZeroDifferences,
    #[error("{n} usable pair(s); the test needs at least {MIN_PAIRS}")]
    TooFewPairs { n: usize },
    #[error("sample lengths differ: {pre} pre vs {post} post")]
    LengthMismatch { pre: usize, post: usize },
    #[error("sample contains a non-finite value")]
    NonFinite,
}

/// Mean and sample standard deviation of the two sides of a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Descriptives {
    pub pre_mean: f64,
    pub pre_std: f64,
    pub post_mean: f64,
    pub post_std: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TestResult {
    pub statistic: f64,
    pub p_value: f64,
    /// Total count for a table; non-zero differences for the signed-rank test.
    pub n: usize,
    /// Degrees of freedom, for chi-squared.
    pub df: Option<usize>,
    pub alpha_effective: f64,
    pub reject: bool,
    pub descriptives: Option<Descriptives>,
}

impl TestResult {
    fn new(statistic: f64, p_value: f64, n: usize, alpha_effective: f64) -> Self {
        TestResult {
            statistic,
            p_value,
            n,
            df: None,
            alpha_effective,
            reject: p_value < alpha_effective,
            descriptives: None,
        }
    }
}

/// Displays a p-value, with tails below [`P_FLOOR`] shown as `< 1e-300`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PValue(pub f64);

impl fmt::Display for PValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let p = self.0;
        if p < P_FLOOR {
            f.write_str("< 1e-300")
        } else if p < 1e-4 {
            write!(f, "{p:.4e}")
        } else {
            write!(f, "{p:.4}")
        }
    }
}

/// Per-test threshold for a family of `m` tests.
///
/// # Panics
/// When `m` is zero.
pub fn bonferroni(alpha: f64, m: usize) -> f64 {
    assert!(m >= 1, "a test family has at least one member");
    alpha / m as f64
}

/// Pearson's chi-squared test of independence on an r×c table of counts.
pub fn chi_squared(table: &[Vec<u64>], alpha_effective: f64) -> Result<TestResult, StatsError> {
    let rows = table.len();
    let cols = table.first().map_or(0, Vec::len);
    if rows < 2 || cols < 2 {
        return Err(StatsError::DegenerateTable(format!("{rows}x{cols}; need at least 2x2")));
    }
    if table.iter().any(|r| r.len() != cols) {
        return Err(StatsError::DegenerateTable("rows differ in length".into()));
    }
    let row_sums: Vec<f64> = table.iter().map(|r| r.iter().sum::<u64>() as f64).collect();
    let col_sums: Vec<f64> = (0..cols).map(|j| table.iter().map(|r| r[j]).sum::<u64>() as f64).collect();
    if let Some(i) = row_sums.iter().position(|&s| s == 0.0) {
        return Err(StatsError::DegenerateTable(format!("row {i} is all zero")));
    }
    if let Some(j) = col_sums.iter().position(|&s| s == 0.0) {
        return Err(StatsError::DegenerateTable(format!("column {j} is all zero")));
    }
    let total: f64 = row_sums.iter().sum();
    let mut statistic = 0.0;
    for (i, row) in table.iter().enumerate() {
        for (j, &observed) in row.iter().enumerate() {
            let expected = row_sums[i] * col_sums[j] / total;
            statistic += (observed as f64 - expected).powi(2) / expected;
        }
    }
    let df = (rows - 1) * (cols - 1);
    let mut result = TestResult::new(statistic, chi_squared_sf(statistic, df as f64), total as usize, alpha_effective);
    result.df = Some(df);
    Ok(result)
}

/// How zero differences enter the signed-rank test.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ZeroMethod {
    /// Drop zero differences before ranking.
    #[default]
    Wilcox,
    /// Rank zero differences with the rest, then drop them.
    Pratt,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PMethod {
    /// Exact up to [`EXACT_MAX_N`] non-zero differences, normal beyond.
    #[default]
    Auto,
    Exact,
    Normal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WilcoxonOptions {
    pub zero_method: ZeroMethod,
    pub method: PMethod,
    pub alpha_effective: f64,
}

impl Default for WilcoxonOptions {
    fn default() -> Self {
        WilcoxonOptions { zero_method: ZeroMethod::Wilcox, method: PMethod::Auto, alpha_effective: DEFAULT_ALPHA }
    }
}

/// Mid-ranks of `values` (1-based), ties sharing their average rank.
fn mid_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Two-sided exact p-value: the chance, under random signs, of a positive
/// rank sum at least as extreme as `w`. Mid-ranks are halves, so sums are
/// tracked in doubled units.
fn exact_p(ranks: &[f64], w: f64) -> f64 {
    let doubled: Vec<usize> = ranks.iter().map(|r| (r * 2.0).round() as usize).collect();
    let max: usize = doubled.iter().sum();
    let mut counts = vec![0f64; max + 1];
    counts[0] = 1.0;
    let mut reach = 0;
    for &r in &doubled {
        for s in (0..=reach).rev() {
            if counts[s] > 0.0 {
                counts[s + r] += counts[s];
            }
        }
        reach += r;
    }
    let total = 2f64.powi(ranks.len() as i32);
    let limit = (w * 2.0).round() as usize;
    let tail: f64 = counts[..=limit.min(max)].iter().sum();
    (2.0 * tail / total).min(1.0)
}

/// Normal approximation with continuity correction and an Edgeworth term
/// for the statistic's kurtosis. Summing squared and fourth-power
/// mid-ranks builds the tie correction into both moments.
fn normal_p(ranks: &[f64], w: f64) -> f64 {
    let mean = ranks.iter().sum::<f64>() / 2.0;
    let s2: f64 = ranks.iter().map(|r| r * r).sum();
    let s4: f64 = ranks.iter().map(|r| r.powi(4)).sum();
    let sd = (s2 / 4.0).sqrt();
    let excess_kurtosis = -2.0 * s4 / (s2 * s2);
    let z = (w + 0.5 - mean) / sd;
    let base = normal_sf(-z);
    let density = (-z * z / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let corrected = base - density * excess_kurtosis / 24.0 * (z.powi(3) - 3.0 * z);
    // The expansion misbehaves far in the tail; keep it near the normal tail there.
    (2.0 * corrected.max(base / 2.0)).min(1.0)
}

/// Wilcoxon signed-rank test on `post - pre`. The statistic is the smaller
/// of the positive and negative rank sums.
pub fn wilcoxon_signed_rank(pre: &[f64], post: &[f64], opts: &WilcoxonOptions) -> Result<TestResult, StatsError> {
    if pre.len() != post.len() {
        return Err(StatsError::LengthMismatch { pre: pre.len(), post: post.len() });
    }
    if pre.iter().chain(post).any(|x| !x.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let diffs: Vec<f64> = pre.iter().zip(post).map(|(a, b)| b - a).collect();
    let nonzero = diffs.iter().filter(|d| **d != 0.0).count();
    if nonzero == 0 {
        return Err(StatsError::AllZeroDifferences);
    }
    if nonzero < MIN_PAIRS {
        return Err(StatsError::TooFewPairs { n: nonzero });
    }
    let ranked: Vec<f64> = match opts.zero_method {
        ZeroMethod::Wilcox => diffs.iter().copied().filter(|d| *d != 0.0).collect(),
        ZeroMethod::Pratt => diffs.clone(),
    };
    let abs: Vec<f64> = ranked.iter().map(|d| d.abs()).collect();
    let all_ranks = mid_ranks(&abs);
    let (mut ranks, mut w_plus, mut w_minus) = (Vec::with_capacity(nonzero), 0.0, 0.0);
    for (d, r) in ranked.iter().zip(all_ranks) {
        if *d > 0.0 {
            w_plus += r;
        } else if *d < 0.0 {
            w_minus += r;
        } else {
            continue;
        }
        ranks.push(r);
    }
    let w = f64::min(w_plus, w_minus);
    let exact = match opts.method {
        PMethod::Auto => nonzero <= EXACT_MAX_N,
        PMethod::Exact => true,
        PMethod::Normal => false,
    };
    let p = if exact { exact_p(&ranks, w) } else { normal_p(&ranks, w) };
    let mut result = TestResult::new(w, p, nonzero, opts.alpha_effective);
    let (pre_mean, pre_std) = mean_std(pre);
    let (post_mean, post_std) = mean_std(post);
    result.descriptives = Some(Descriptives { pre_mean, pre_std, post_mean, post_std });
    Ok(result)
}
