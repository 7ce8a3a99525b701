//! Corpus-level report: change-case tables, coverage and text-metric tests,
//! the pre/post similarity distribution and key-change histogram.
//!
//! Reports are plain data written as JSON and CSV. Every float is rounded
//! to 4 decimals and every collection has a fixed order, so rebuilding a
//! report from the same store reproduces it byte for byte.

mod inputs;
mod output;
mod pipeline;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::annotation::Version;
use crate::changedetect::PairsManifest;
use crate::corpus::StoreError;
use crate::queryengine::{
    disagreement_rate, score_table, ChangeCase, ChangeRecord, Predicate, QueryEngine, QueryError, QueryKind,
};
use crate::stats::{bonferroni, chi_squared, wilcoxon_signed_rank, PValue, TestResult, WilcoxonOptions, DEFAULT_ALPHA};
use crate::yearmonth::YearMonth;

pub use inputs::{
    metric_pairs, read_metrics_csv, write_metrics_csv, MetricPair, ReportInputs, ANNOTATIONS_DIR, METRICS_FILE,
};
pub use output::{write_report, REPORT_DIR};
pub use pipeline::{
    default_pivot, run_pipeline, AnnotateReport, AnnotateSection, DiscoverSection, ExtractSection, FetchSection,
    GateSection, HttpSection, MetricsSection, PairsSection, Pipeline, PipelineConfig, QuerySection, ReportSection,
    DEFAULT_STORE, RECORDS_FILE,
};

pub const REPORT_FORMAT: &str = "polidiff-report";
pub const REPORT_VERSION: u32 = 1;
/// Seed recorded when none is configured; matches the gate's default.
pub const DEFAULT_SEED: u64 = 42;
pub const UNCHANGED_BUCKET: &str = "unchanged";
pub const METRIC_NAMES: [&str; 5] = ["syllables", "words", "sentences", "words_per_sentence", "passive_index"];

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("empty corpus: no selected pairs and no annotated policies")]
    EmptyCorpus,
    #[error("{stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl ReportError {
    pub(crate) fn stage(stage: &'static str, e: impl std::fmt::Display) -> Self {
        ReportError::Stage { stage, message: e.to_string() }
    }
}

impl From<QueryError> for ReportError {
    fn from(e: QueryError) -> Self {
        ReportError::stage("query", e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ReportConfig {
    pub seed: u64,
    pub alpha: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        ReportConfig { seed: DEFAULT_SEED, alpha: DEFAULT_ALPHA }
    }
}

/// Rounds to 4 decimals, folding negative zero into zero.
pub fn round4(x: f64) -> f64 {
    let r = (x * 1e4).round() / 1e4;
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportHeader {
    pub format: String,
    pub version: u32,
    pub seed: u64,
    pub alpha: f64,
    pub pivot: Option<YearMonth>,
    pub threshold: Option<f64>,
    pub paired_policies: usize,
    pub skipped_policies: usize,
    pub annotated_policies: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseShare {
    pub case: String,
    pub count: usize,
    pub percent: f64,
}

/// How the policies split across the change cases of one query.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseTable {
    pub query_id: String,
    pub kind: QueryKind,
    pub n: usize,
    pub cases: Vec<CaseShare>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestSummary {
    pub statistic: f64,
    pub df: Option<usize>,
    pub p_value: String,
    pub alpha_effective: f64,
    pub reject: bool,
}

impl TestSummary {
    fn from_result(r: &TestResult) -> Self {
        TestSummary {
            statistic: round4(r.statistic),
            df: r.df,
            p_value: PValue(r.p_value).to_string(),
            alpha_effective: r.alpha_effective,
            reject: r.reject,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageTest {
    pub query_id: String,
    pub category: String,
    pub n: usize,
    pub pre_percent: f64,
    pub post_percent: f64,
    pub test: Option<TestSummary>,
    /// Why no test was run.
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricTest {
    pub metric: String,
    pub n: usize,
    pub pre_mean: f64,
    pub pre_std: f64,
    pub post_mean: f64,
    pub post_std: f64,
    pub test: Option<TestSummary>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimilaritySummary {
    pub n: usize,
    /// Minimum, the nine interior deciles, and maximum.
    pub deciles: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Disagreement {
    pub policies: usize,
    pub queries: usize,
    pub pre: f64,
    pub post: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusReport {
    pub header: ReportHeader,
    pub queries: Vec<CaseTable>,
    pub coverage: Vec<CoverageTest>,
    pub metrics: Vec<MetricTest>,
    pub similarity: Option<SimilaritySummary>,
    pub key_changes: BTreeMap<String, usize>,
    pub disagreement: Option<Disagreement>,
}

/// Key-change month counts, with unchanged policies in their own bucket.
pub fn emit_histogram(manifest: &PairsManifest) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    for pair in &manifest.pairs {
        let bucket = match pair.key_change {
            Some(m) if !pair.unchanged => m.to_string(),
            _ => UNCHANGED_BUCKET.to_string(),
        };
        *counts.entry(bucket).or_insert(0) += 1;
    }
    counts
}

/// Minimum, deciles and maximum by linear interpolation between order
/// statistics.
pub fn deciles(values: &[f64]) -> Vec<f64> {
    if values.is_empty() {
        return Vec::new();
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let last = (sorted.len() - 1) as f64;
    (0..=10)
        .map(|k| {
            let pos = last * k as f64 / 10.0;
            let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
            sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
        })
        .collect()
}

/// Case percentages per query, in catalog order.
pub fn case_tables(engine: &QueryEngine, records: &[ChangeRecord]) -> Vec<CaseTable> {
    engine
        .catalog()
        .queries()
        .iter()
        .map(|q| {
            let cases: Vec<ChangeCase> = records.iter().filter(|r| r.query_id == q.id).map(|r| r.case).collect();
            let n = cases.len();
            let shares = ChangeCase::all_for(q.kind)
                .into_iter()
                .map(|case| {
                    let count = cases.iter().filter(|c| **c == case).count();
                    let percent = if n == 0 { 0.0 } else { round4(100.0 * count as f64 / n as f64) };
                    CaseShare { case: case.to_string(), count, percent }
                })
                .collect();
            CaseTable { query_id: q.id.clone(), kind: q.kind, n, cases: shares }
        })
        .collect()
}

/// Chi-squared test of pre vs post coverage for each coverage query, with
/// a Bonferroni threshold over the family.
pub fn coverage_tests(engine: &QueryEngine, records: &[ChangeRecord], alpha: f64) -> Vec<CoverageTest> {
    let coverage: Vec<_> = engine.catalog().of_kind(QueryKind::Coverage).collect();
    if coverage.is_empty() {
        return Vec::new();
    }
    let alpha_effective = bonferroni(alpha, coverage.len());
    coverage
        .into_iter()
        .map(|q| {
            let rows: Vec<&ChangeRecord> = records.iter().filter(|r| r.query_id == q.id).collect();
            let n = rows.len() as u64;
            let pre = rows.iter().filter(|r| r.pre_score.is_positive()).count() as u64;
            let post = rows.iter().filter(|r| r.post_score.is_positive()).count() as u64;
            let percent = |k: u64| if n == 0 { 0.0 } else { round4(100.0 * k as f64 / n as f64) };
            let (test, note) = match chi_squared(&[vec![pre, n - pre], vec![post, n - post]], alpha_effective) {
                Ok(r) => (Some(TestSummary::from_result(&r)), None),
                Err(e) => (None, Some(e.to_string())),
            };
            let category = match &q.filter {
                Predicate::Category(c) => c.clone(),
                _ => String::new(),
            };
            CoverageTest {
                query_id: q.id.clone(),
                category,
                n: n as usize,
                pre_percent: percent(pre),
                post_percent: percent(post),
                test,
                note,
            }
        })
        .collect()
}

fn metric_value(m: &crate::textmetrics::TextMetrics, name: &str) -> Option<f64> {
    match name {
        "syllables" => Some(m.syllables as f64),
        "words" => Some(m.words as f64),
        "sentences" => Some(m.sentences as f64),
        "words_per_sentence" => m.words_per_sentence,
        "passive_index" => m.passive_index,
        _ => None,
    }
}

/// Signed-rank test per text metric, with a Bonferroni threshold over the
/// five metrics. Pairs where either side lacks the metric are left out.
pub fn metric_tests(pairs: &[MetricPair], alpha: f64) -> Vec<MetricTest> {
    let opts = WilcoxonOptions { alpha_effective: bonferroni(alpha, METRIC_NAMES.len()), ..Default::default() };
    METRIC_NAMES
        .iter()
        .map(|&name| {
            let (pre, post): (Vec<f64>, Vec<f64>) =
                pairs.iter().filter_map(|p| Some((metric_value(&p.pre, name)?, metric_value(&p.post, name)?))).unzip();
            let mean_std = |xs: &[f64]| {
                if xs.is_empty() {
                    return (0.0, 0.0);
                }
                let n = xs.len() as f64;
                let mean = xs.iter().sum::<f64>() / n;
                let var =
                    if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
                (mean, var.sqrt())
            };
            let (pre_mean, pre_std) = mean_std(&pre);
            let (post_mean, post_std) = mean_std(&post);
            let (test, note) = match wilcoxon_signed_rank(&pre, &post, &opts) {
                Ok(r) => (Some(TestSummary::from_result(&r)), None),
                Err(e) => (None, Some(e.to_string())),
            };
            MetricTest {
                metric: name.to_string(),
                n: pre.len(),
                pre_mean: round4(pre_mean),
                pre_std: round4(pre_std),
                post_mean: round4(post_mean),
                post_std: round4(post_std),
                test,
                note,
            }
        })
        .collect()
}

impl CorpusReport {
    pub fn build(inputs: &ReportInputs, engine: &QueryEngine, config: &ReportConfig) -> Result<Self, ReportError> {
        let paired = inputs.manifest.as_ref().map_or(0, |m| m.pairs.len());
        if paired == 0 && inputs.annotated.is_empty() {
            return Err(ReportError::EmptyCorpus);
        }
        let queries: Vec<_> = engine.catalog().queries().iter().collect();
        let records = engine.compare(&inputs.annotated, &queries);

        let disagreement = match &inputs.alternate {
            Some(alt) if !inputs.annotated.is_empty() => {
                let alt_records = engine.compare(alt, &queries);
                let rate = |v: Version| {
                    disagreement_rate(&score_table(&records, v), &score_table(&alt_records, v))
                        .map_err(|e| ReportError::stage("disagreement", e))
                };
                Some(Disagreement {
                    policies: inputs.annotated.len(),
                    queries: queries.len(),
                    pre: round4(rate(Version::Pre)?),
                    post: round4(rate(Version::Post)?),
                })
            }
            _ => None,
        };

        let similarity = (!inputs.similarities.is_empty()).then(|| SimilaritySummary {
            n: inputs.similarities.len(),
            deciles: deciles(&inputs.similarities).into_iter().map(round4).collect(),
        });

        Ok(CorpusReport {
            header: ReportHeader {
                format: REPORT_FORMAT.into(),
                version: REPORT_VERSION,
                seed: config.seed,
                alpha: config.alpha,
                pivot: inputs.manifest.as_ref().map(|m| m.pivot),
                threshold: inputs.manifest.as_ref().map(|m| m.threshold),
                paired_policies: paired,
                skipped_policies: inputs.manifest.as_ref().map_or(0, |m| m.skipped.len()),
                annotated_policies: inputs.annotated.len(),
            },
            queries: if inputs.annotated.is_empty() { Vec::new() } else { case_tables(engine, &records) },
            coverage: if inputs.annotated.is_empty() {
                Vec::new()
            } else {
                coverage_tests(engine, &records, config.alpha)
            },
            metrics: if inputs.metrics.is_empty() { Vec::new() } else { metric_tests(&inputs.metrics, config.alpha) },
            similarity,
            key_changes: inputs.manifest.as_ref().map(emit_histogram).unwrap_or_default(),
            disagreement,
        })
    }

    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("report serializes");
        json.push('\n');
        json
    }
}
