use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ReportError;
use crate::annotation::Version;
use crate::changedetect::{similarity_ratio, PairsManifest, PAIRS_FILE};
use crate::corpus::SnapshotStore;
use crate::queryengine::{load_policy_pairs, PolicyPair};
use crate::taxonomy::Taxonomy;
use crate::textmetrics::{compute_metrics, parse_dependency_sidecar, passive_index_from_parses, TextMetrics};

/// Store-relative path of the per-version text metrics table.
pub const METRICS_FILE: &str = "metrics.csv";
/// Store-relative directory holding `{policy}.{pre|post}.json` annotations.
pub const ANNOTATIONS_DIR: &str = "annotations";

#[derive(Debug, Clone, PartialEq)]
pub struct MetricPair {
    pub policy_id: String,
    pub pre: TextMetrics,
    pub post: TextMetrics,
}

/// Everything a report is built from.
#[derive(Debug, Clone, Default)]
pub struct ReportInputs {
    pub manifest: Option<PairsManifest>,
    pub metrics: Vec<MetricPair>,
    /// Pre vs post similarity ratio per selected pair.
    pub similarities: Vec<f64>,
    pub annotated: Vec<PolicyPair>,
    /// Second annotation of the same policies, for disagreement.
    pub alternate: Option<Vec<PolicyPair>>,
}

impl ReportInputs {
    /// Gathers inputs from a store. Missing stages are left empty; an
    /// `annotations` directory is used when `annotations` is not given.
    pub fn from_store(
        store: &SnapshotStore,
        taxonomy: &Taxonomy,
        annotations: Option<&Path>,
        alternate: Option<&Path>,
    ) -> Result<Self, ReportError> {
        let manifest = if store.root().join(PAIRS_FILE).exists() { Some(PairsManifest::load(store)?) } else { None };
        let (metrics, similarities) = match &manifest {
            Some(m) => {
                let texts = pair_texts(store, m)?;
                let sims = texts.par_iter().map(|(_, pre, post)| similarity_ratio(pre, post)).collect();
                // The metrics stage's table wins so its passive mode carries over.
                let table = store.root().join(METRICS_FILE);
                let metrics = if table.is_file() { read_metrics_csv(&table)? } else { metrics_of(&texts) };
                (metrics, sims)
            }
            None => (Vec::new(), Vec::new()),
        };

        let default_dir = store.root().join(ANNOTATIONS_DIR);
        let dir = annotations.unwrap_or(&default_dir);
        let annotated = if dir.is_dir() { load_policy_pairs(dir, taxonomy)?.pairs } else { Vec::new() };
        let alternate = alternate.map(|d| load_policy_pairs(d, taxonomy).map(|l| l.pairs)).transpose()?;
        Ok(ReportInputs { manifest, metrics, similarities, annotated, alternate })
    }
}

fn pair_texts(store: &SnapshotStore, manifest: &PairsManifest) -> Result<Vec<(String, String, String)>, ReportError> {
    manifest
        .pairs
        .iter()
        .map(|p| {
            Ok((p.policy_id.clone(), store.read_text(&p.policy_id, p.pre)?, store.read_text(&p.policy_id, p.post)?))
        })
        .collect()
}

fn metrics_of(texts: &[(String, String, String)]) -> Vec<MetricPair> {
    texts
        .par_iter()
        .map(|(id, pre, post)| MetricPair {
            policy_id: id.clone(),
            pre: compute_metrics(pre),
            post: compute_metrics(post),
        })
        .collect()
}

/// Text metrics of every selected pair, in manifest order.
///
/// With `dep_dir`, the passive index comes from `{policy}.{pre|post}.dep`
/// parse sidecars where one exists; versions without a sidecar keep the
/// lexical rule.
pub fn metric_pairs(
    store: &SnapshotStore,
    manifest: &PairsManifest,
    dep_dir: Option<&Path>,
) -> Result<Vec<MetricPair>, ReportError> {
    let mut pairs = metrics_of(&pair_texts(store, manifest)?);
    let Some(dir) = dep_dir else { return Ok(pairs) };
    for pair in &mut pairs {
        for (version, metrics) in [(Version::Pre, &mut pair.pre), (Version::Post, &mut pair.post)] {
            let path = dir.join(format!("{}.{version}.dep", pair.policy_id));
            match std::fs::read_to_string(&path) {
                Ok(doc) => {
                    let parses = parse_dependency_sidecar(&doc)
                        .map_err(|e| ReportError::stage("metrics", format!("{}: {e}", path.display())))?;
                    metrics.passive_index = passive_index_from_parses(&parses);
                }
                Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                    log::warn!("{}: no parse sidecar; lexical passive rule used", path.display());
                }
                Err(source) => return Err(ReportError::Io { path: path.display().to_string(), source }),
            }
        }
    }
    Ok(pairs)
}

#[derive(Debug, Serialize, Deserialize)]
struct MetricRow {
    policy_id: String,
    version: Version,
    syllables: usize,
    words: usize,
    sentences: usize,
    words_per_sentence: Option<f64>,
    passive_index: Option<f64>,
}

impl MetricRow {
    fn new(policy_id: &str, version: Version, m: &TextMetrics) -> Self {
        MetricRow {
            policy_id: policy_id.to_string(),
            version,
            syllables: m.syllables,
            words: m.words,
            sentences: m.sentences,
            words_per_sentence: m.words_per_sentence,
            passive_index: m.passive_index,
        }
    }

    fn metrics(&self) -> TextMetrics {
        TextMetrics {
            syllables: self.syllables,
            words: self.words,
            sentences: self.sentences,
            words_per_sentence: self.words_per_sentence,
            passive_index: self.passive_index,
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> ReportError {
    ReportError::stage("metrics", format!("{}: {e}", path.display()))
}

/// Writes one row per policy and version; absent ratios are empty cells.
pub fn write_metrics_csv(pairs: &[MetricPair], path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| csv_err(path, e))?;
    for p in pairs {
        for (v, m) in [(Version::Pre, &p.pre), (Version::Post, &p.post)] {
            w.serialize(MetricRow::new(&p.policy_id, v, m)).map_err(|e| csv_err(path, e))?;
        }
    }
    w.flush().map_err(|source| ReportError::Io { path: path.display().to_string(), source })
}

/// Reads a table written by [`write_metrics_csv`]. Policies with only one
/// version are dropped with a warning.
pub fn read_metrics_csv(path: &Path) -> Result<Vec<MetricPair>, ReportError> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_err(path, e))?;
    let mut by_policy: BTreeMap<String, (Option<TextMetrics>, Option<TextMetrics>)> = BTreeMap::new();
    for row in r.deserialize::<MetricRow>() {
        let row = row.map_err(|e| csv_err(path, e))?;
        let slot = by_policy.entry(row.policy_id.clone()).or_default();
        match row.version {
            Version::Pre => slot.0 = Some(row.metrics()),
            Version::Post => slot.1 = Some(row.metrics()),
        }
    }
    Ok(by_policy
        .into_iter()
        .filter_map(|(policy_id, slot)| match slot {
            (Some(pre), Some(post)) => Some(MetricPair { policy_id, pre, post }),
            _ => {
                log::warn!("{policy_id}: metrics for one version only; skipped");
                None
            }
        })
        .collect())
}
