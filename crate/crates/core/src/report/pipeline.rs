use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::inputs::{metric_pairs, write_metrics_csv, MetricPair, ReportInputs, ANNOTATIONS_DIR, METRICS_FILE};
use super::output::{write_report, REPORT_DIR};
use super::{CorpusReport, ReportConfig, ReportError, DEFAULT_SEED};
use crate::annotation::{
    annotation_file_name, label_policy, save_annotations, segment_text, LabelOptions, Labeler, Version,
};
use crate::changedetect::{PairOptions, PairsManifest, StableChoice, DEFAULT_THRESHOLD};
use crate::corpus::{
    discover_policies, extract_store, fetch_policies, parse_url_list, ArchiveClient, ArchiveConfig, Discovery,
    ExtractReport, FetchReport, HostThrottle, LiveFetcher, PoolConfig, SnapshotStore, DEFAULT_MIN_CHARS,
};
use crate::http::{HttpClient, HttpConfig};
use crate::policygate::{gate_store, GateReport, LinearTextModel};
use crate::queryengine::{load_policy_pairs, Catalog, ChangeRecord, QueryEngine};
use crate::taxonomy::{load_taxonomy, Taxonomy};
use crate::yearmonth::YearMonth;

/// Store-relative file holding per-policy query records.
pub const RECORDS_FILE: &str = "results/records.json";
pub const DEFAULT_STORE: &str = "store";

pub fn default_pivot() -> YearMonth {
    YearMonth::new(2018, 5).expect("valid month")
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DiscoverSection {
    /// Home-page URL list, one per line.
    pub input: Option<PathBuf>,
    /// Registrable domains a policy link may point to besides the site's own.
    pub allowed_domains: Vec<String>,
}

// `flatten` rules out `deny_unknown_fields` here.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FetchSection {
    pub from: Option<YearMonth>,
    pub to: Option<YearMonth>,
    #[serde(flatten)]
    pub pool: PoolConfig,
    pub archive: ArchiveConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HttpSection {
    pub timeout_secs: u64,
    pub retries: u32,
    pub agent: String,
}

impl Default for HttpSection {
    fn default() -> Self {
        let d = HttpConfig::default();
        HttpSection { timeout_secs: d.timeout.as_secs(), retries: d.retries, agent: "polidiff".into() }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSection {
    pub min_chars: usize,
}

impl Default for ExtractSection {
    fn default() -> Self {
        ExtractSection { min_chars: DEFAULT_MIN_CHARS }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GateSection {
    /// Trained model; the gate stage is skipped without one.
    pub model: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PairsSection {
    pub threshold: f64,
    pub stable: StableChoice,
}

impl Default for PairsSection {
    fn default() -> Self {
        PairsSection { threshold: DEFAULT_THRESHOLD, stable: StableChoice::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnnotateSection {
    /// Labeler endpoint; the annotate stage is skipped without one.
    pub labeler: Option<String>,
    pub batch_size: Option<usize>,
    pub parallelism: usize,
}

impl Default for AnnotateSection {
    fn default() -> Self {
        AnnotateSection { labeler: None, batch_size: None, parallelism: LabelOptions::default().parallelism }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricsSection {
    /// Dependency-parse sidecars `{policy}.{pre|post}.dep` for parse-based
    /// passive detection.
    pub dep_annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuerySection {
    /// `all`, `cov`, `ico`, `spec` or comma-separated query ids.
    pub queries: String,
    pub catalog: Option<PathBuf>,
    /// Defaults to the store's `annotations` directory.
    pub annotations: Option<PathBuf>,
    /// Second annotation source for the disagreement section.
    pub alternate: Option<PathBuf>,
}

impl Default for QuerySection {
    fn default() -> Self {
        QuerySection { queries: "all".into(), catalog: None, annotations: None, alternate: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportSection {
    pub alpha: f64,
    /// Defaults to the store's `report` directory.
    pub out: Option<PathBuf>,
}

impl Default for ReportSection {
    fn default() -> Self {
        ReportSection { alpha: ReportConfig::default().alpha, out: None }
    }
}

/// Pipeline configuration, one section per stage.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub store: Option<PathBuf>,
    pub seed: Option<u64>,
    pub pivot: Option<YearMonth>,
    /// Taxonomy file; the bundled one is used otherwise.
    pub taxonomy: Option<PathBuf>,
    pub http: HttpSection,
    pub discover: DiscoverSection,
    pub fetch: FetchSection,
    pub extract: ExtractSection,
    pub gate: GateSection,
    pub pairs: PairsSection,
    pub annotate: AnnotateSection,
    pub metrics: MetricsSection,
    pub query: QuerySection,
    pub report: ReportSection,
}

impl PipelineConfig {
    pub fn from_toml_str(doc: &str) -> Result<Self, ReportError> {
        toml::from_str(doc).map_err(|e| ReportError::stage("config", e))
    }

    pub fn load(path: &Path) -> Result<Self, ReportError> {
        let doc =
            fs::read_to_string(path).map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
        toml::from_str(&doc).map_err(|e| ReportError::stage("config", format!("{}: {e}", path.display())))
    }

    pub fn store_path(&self) -> PathBuf {
        self.store.clone().unwrap_or_else(|| PathBuf::from(DEFAULT_STORE))
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn pivot(&self) -> YearMonth {
        self.pivot.unwrap_or_else(default_pivot)
    }

    pub fn http_config(&self) -> HttpConfig {
        HttpConfig {
            timeout: Duration::from_secs(self.http.timeout_secs),
            retries: self.http.retries,
            ..HttpConfig::default()
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct AnnotateReport {
    pub written: usize,
    /// Versions whose annotation file already existed.
    pub skipped: usize,
    pub failures: Vec<(String, String)>,
}

/// A configured store with one method per stage. Each stage reads what
/// earlier stages left in the store and can be rerun on its own.
#[derive(Debug)]
pub struct Pipeline {
    config: PipelineConfig,
    store: SnapshotStore,
    taxonomy: Taxonomy,
}

impl Pipeline {
    pub fn open(config: PipelineConfig) -> Result<Self, ReportError> {
        let store = SnapshotStore::open(config.store_path()).map_err(|e| ReportError::stage("store", e))?;
        let taxonomy = match &config.taxonomy {
            Some(p) => load_taxonomy(p).map_err(|e| ReportError::stage("taxonomy", e))?,
            None => Taxonomy::bundled(),
        };
        Ok(Pipeline { config, store, taxonomy })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    pub fn store(&self) -> &SnapshotStore {
        &self.store
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    fn path(&self, relative: &str) -> PathBuf {
        self.store.root().join(relative)
    }

    pub fn annotations_dir(&self) -> PathBuf {
        self.config.query.annotations.clone().unwrap_or_else(|| self.path(ANNOTATIONS_DIR))
    }

    pub fn engine(&self) -> Result<QueryEngine, ReportError> {
        match &self.config.query.catalog {
            Some(p) => {
                let catalog = Catalog::load(p, &self.taxonomy).map_err(|e| ReportError::stage("query", e))?;
                Ok(QueryEngine::with_catalog(self.taxonomy.clone(), catalog))
            }
            None => Ok(QueryEngine::new(self.taxonomy.clone())),
        }
    }

    fn live_fetcher(&self) -> LiveFetcher {
        let throttle = Arc::new(HostThrottle::new(self.config.fetch.pool.politeness));
        LiveFetcher::new(HttpClient::new(self.config.http_config()), throttle, self.config.http.agent.clone())
    }

    pub fn discover(&self, input: &Path) -> Result<Discovery, ReportError> {
        let text = fs::read_to_string(input)
            .map_err(|source| ReportError::Io { path: input.display().to_string(), source })?;
        let urls =
            parse_url_list(&text).map_err(|e| ReportError::stage("discover", format!("{}: {e}", input.display())))?;
        let fetcher = self.live_fetcher();
        let discovery = discover_policies(&urls, &self.config.discover.allowed_domains, |u| fetcher.fetch(u));
        discovery.save(&self.store).map_err(|e| ReportError::stage("discover", e))?;
        Ok(discovery)
    }

    pub fn fetch(&self, from: YearMonth, to: YearMonth) -> Result<FetchReport, ReportError> {
        let discovery = Discovery::load(&self.store).map_err(|e| ReportError::stage("fetch", e))?;
        let archive = ArchiveClient::new(self.config.fetch.archive.clone(), self.config.http_config());
        fetch_policies(&self.store, &archive, &discovery.targets(), from, to, &self.config.fetch.pool)
            .map_err(|e| ReportError::stage("fetch", e))
    }

    pub fn extract(&self) -> Result<ExtractReport, ReportError> {
        extract_store(&self.store, self.config.extract.min_chars).map_err(|e| ReportError::stage("extract", e))
    }

    pub fn gate(&self, model: &Path) -> Result<GateReport, ReportError> {
        let model = LinearTextModel::load(model)
            .map_err(|e| ReportError::stage("gate", format!("{}: {e}", model.display())))?;
        gate_store(&self.store, &model).map_err(|e| ReportError::stage("gate", e))
    }

    pub fn select_pairs(&self) -> Result<PairsManifest, ReportError> {
        let options = PairOptions { threshold: self.config.pairs.threshold, stable: self.config.pairs.stable };
        let manifest = PairsManifest::build(&self.store, self.config.pivot(), &options)
            .map_err(|e| ReportError::stage("select-pairs", e))?;
        manifest.save(&self.store).map_err(|e| ReportError::stage("select-pairs", e))?;
        Ok(manifest)
    }

    pub fn pairs_manifest(&self, stage: &'static str) -> Result<PairsManifest, ReportError> {
        PairsManifest::load(&self.store).map_err(|e| ReportError::stage(stage, e))
    }

    /// Segments and labels both versions of every selected pair. Existing
    /// annotation files are kept, so an interrupted run picks up where it
    /// stopped.
    pub fn annotate(&self, labeler: &dyn Labeler, out: &Path) -> Result<AnnotateReport, ReportError> {
        let manifest = self.pairs_manifest("annotate")?;
        fs::create_dir_all(out).map_err(|source| ReportError::Io { path: out.display().to_string(), source })?;
        let options =
            LabelOptions { batch_size: self.config.annotate.batch_size, parallelism: self.config.annotate.parallelism };
        let mut report = AnnotateReport::default();
        for pair in &manifest.pairs {
            for (version, month) in [(Version::Pre, pair.pre), (Version::Post, pair.post)] {
                let path = out.join(annotation_file_name(&pair.policy_id, version));
                if path.exists() {
                    report.skipped += 1;
                    continue;
                }
                let outcome = self
                    .store
                    .read_text(&pair.policy_id, month)
                    .map_err(|e| e.to_string())
                    .and_then(|text| segment_text(&text).map_err(|e| e.to_string()))
                    .and_then(|segments| {
                        label_policy(&pair.policy_id, version, &segments, labeler, &self.taxonomy, &options)
                            .map_err(|e| e.to_string())
                    });
                match outcome {
                    Ok(policy) => {
                        save_annotations(&policy, &path).map_err(|e| ReportError::stage("annotate", e))?;
                        report.written += 1;
                    }
                    Err(e) => report.failures.push((format!("{}.{version}", pair.policy_id), e)),
                }
            }
        }
        Ok(report)
    }

    /// Text metrics for every selected pair, written to `out`.
    pub fn metrics(&self, manifest: &PairsManifest, out: &Path) -> Result<Vec<MetricPair>, ReportError> {
        let pairs = metric_pairs(&self.store, manifest, self.config.metrics.dep_annotations.as_deref())?;
        if let Some(parent) = out.parent() {
            fs::create_dir_all(parent)
                .map_err(|source| ReportError::Io { path: parent.display().to_string(), source })?;
        }
        write_metrics_csv(&pairs, out)?;
        Ok(pairs)
    }

    /// Evaluates the selected queries over annotated pairs and writes the
    /// per-policy records to `out/records.json`.
    pub fn query(&self, annotations: &Path, out: &Path) -> Result<Vec<ChangeRecord>, ReportError> {
        let engine = self.engine()?;
        let selected =
            engine.catalog().select(&self.config.query.queries).map_err(|e| ReportError::stage("query", e))?;
        let loaded = load_policy_pairs(annotations, &self.taxonomy).map_err(|e| ReportError::stage("query", e))?;
        let records = engine.compare(&loaded.pairs, &selected);
        fs::create_dir_all(out).map_err(|source| ReportError::Io { path: out.display().to_string(), source })?;
        let path = out.join("records.json");
        let mut json = serde_json::to_string_pretty(&records).expect("records serialize");
        json.push('\n');
        fs::write(&path, json).map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
        Ok(records)
    }

    /// Records written by [`Pipeline::query`].
    pub fn read_records(path: &Path) -> Result<Vec<ChangeRecord>, ReportError> {
        let bytes = fs::read(path).map_err(|source| ReportError::Io { path: path.display().to_string(), source })?;
        serde_json::from_slice(&bytes).map_err(|e| ReportError::stage("stats", format!("{}: {e}", path.display())))
    }

    pub fn report_config(&self) -> ReportConfig {
        ReportConfig { seed: self.config.seed(), alpha: self.config.report.alpha }
    }

    /// Builds the report from whatever the store holds and writes it.
    pub fn report(&self) -> Result<(CorpusReport, Vec<PathBuf>), ReportError> {
        let annotations = self.annotations_dir();
        let inputs = ReportInputs::from_store(
            &self.store,
            &self.taxonomy,
            Some(&annotations),
            self.config.query.alternate.as_deref(),
        )?;
        let report = CorpusReport::build(&inputs, &self.engine()?, &self.report_config())?;
        let out = self.config.report.out.clone().unwrap_or_else(|| self.path(REPORT_DIR));
        let written = write_report(&report, &out)?;
        Ok((report, written))
    }

    /// Runs every stage whose inputs are configured or present, in order.
    pub fn run(&self, labeler: Option<&dyn Labeler>) -> Result<CorpusReport, ReportError> {
        if let Some(input) = &self.config.discover.input {
            let d = self.discover(input)?;
            log::info!("discover: {} policies, {} failures", d.policies.len(), d.failures.len());
        }
        if let (Some(from), Some(to)) = (self.config.fetch.from, self.config.fetch.to) {
            let r = self.fetch(from, to)?;
            log::info!("fetch: {} written, {} unchanged, {} failures", r.written, r.unchanged, r.failures.len());
        }
        let r = self.extract()?;
        log::info!("extract: {} extracted, {} rejected", r.extracted, r.rejected);
        if let Some(model) = &self.config.gate.model {
            let r = self.gate(model)?;
            log::info!("gate: {} valid, {} rejected", r.valid, r.rejected.len());
        }
        let has_policies = !self.store.policies().map_err(|e| ReportError::stage("select-pairs", e))?.is_empty();
        if has_policies {
            let manifest = self.select_pairs()?;
            log::info!("select-pairs: {} pairs, {} skipped", manifest.pairs.len(), manifest.skipped.len());
            if let Some(labeler) = labeler {
                let r = self.annotate(labeler, &self.annotations_dir())?;
                log::info!("annotate: {} written, {} kept, {} failures", r.written, r.skipped, r.failures.len());
            }
            self.metrics(&manifest, &self.path(METRICS_FILE))?;
        }
        let annotations = self.annotations_dir();
        if annotations.is_dir() {
            let records = self.query(&annotations, &self.path("results"))?;
            log::info!("query: {} records", records.len());
        }
        Ok(self.report()?.0)
    }
}

/// Opens the configured store and runs the whole pipeline. The annotate
/// stage uses the configured HTTP labeler, if any.
pub fn run_pipeline(config: &PipelineConfig) -> Result<CorpusReport, ReportError> {
    let pipeline = Pipeline::open(config.clone())?;
    let labeler = config
        .annotate
        .labeler
        .as_ref()
        .map(|url| crate::annotation::HttpLabeler::new(url.clone(), config.http_config()));
    pipeline.run(labeler.as_ref().map(|l| l as &dyn Labeler))
}
