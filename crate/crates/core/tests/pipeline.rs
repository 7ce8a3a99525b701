mod common;

use std::fs;
use std::path::{Path, PathBuf};

use common::store;
use polidiff::annotation::{Labeler, LabelerError, SegmentLabels};
use polidiff::changedetect::PairsManifest;
use polidiff::report::{
    emit_histogram, read_metrics_csv, Pipeline, PipelineConfig, ReportError, METRICS_FILE, UNCHANGED_BUCKET,
};

fn fixtures(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn copy_dir(from: &Path, to: &Path) {
    fs::create_dir_all(to).unwrap();
    for entry in fs::read_dir(from).unwrap() {
        let entry = entry.unwrap();
        fs::copy(entry.path(), to.join(entry.file_name())).unwrap();
    }
}

fn config(root: &Path) -> PipelineConfig {
    PipelineConfig { store: Some(root.to_path_buf()), ..PipelineConfig::default() }
}

fn read_all(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), fs::read(e.path()).unwrap())
        })
        .collect();
    files.sort();
    files
}

#[test]
fn config_sections() {
    let c = PipelineConfig::from_toml_str(
        r#"
        store = "data"
        seed = 7
        pivot = "2018-06"
        [fetch]
        from = "2016-01"
        to = "2019-05"
        workers = 2
        politeness = 250
        [pairs]
        threshold = 0.9
        stable = "earliest"
        [query]
        queries = "cov"
        [report]
        alpha = 0.01
        "#,
    )
    .unwrap();
    assert_eq!(c.store_path(), PathBuf::from("data"));
    assert_eq!((c.seed(), c.pivot().to_string()), (7, "2018-06".to_string()));
    assert_eq!(c.fetch.pool.workers, 2);
    assert_eq!(c.fetch.pool.politeness.as_millis(), 250);
    assert_eq!(c.pairs.threshold, 0.9);
    assert_eq!(c.report.alpha, 0.01);

    let d = PipelineConfig::from_toml_str("").unwrap();
    assert_eq!((d.seed(), d.pivot().to_string()), (42, "2018-05".to_string()));
    assert_eq!(d.extract.min_chars, 500);
    assert_eq!(d.query.queries, "all");

    assert!(matches!(
        PipelineConfig::from_toml_str("[gate]\nmodle = \"x\"\n"),
        Err(ReportError::Stage { stage: "config", .. })
    ));
}

#[test]
fn offline_run_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("store");
    store::build(&root, 16);
    copy_dir(&fixtures("annotations"), &root.join("annotations"));
    let pipeline = Pipeline::open(config(&root)).unwrap();
    let report = pipeline.run(None).unwrap();

    assert_eq!(report.header.paired_policies, 16);
    assert_eq!(report.header.annotated_policies, 16);
    assert_eq!(report.header.seed, 42);
    assert_eq!(report.queries.len(), 24);
    assert_eq!(report.metrics.len(), 5);
    assert_eq!(report.similarity.as_ref().unwrap().deciles.len(), 11);
    assert!(report.disagreement.is_none());

    // Hand count over the synthetic timelines: 4 unchanged, 4 at 2018-04, 8 at 2018-06.
    let manifest = PairsManifest::load(pipeline.store()).unwrap();
    for (i, pair) in manifest.pairs.iter().enumerate() {
        assert_eq!(pair.policy_id, store::policy_id(i));
        assert_eq!(pair.key_change, store::expected_key_change(i), "{}", pair.policy_id);
    }
    let hist = emit_histogram(&manifest);
    assert_eq!(hist[UNCHANGED_BUCKET], 4);
    assert_eq!(hist["2018-04"], 4);
    assert_eq!(hist["2018-06"], 8);
    assert_eq!(report.key_changes, hist);

    let metrics = read_metrics_csv(&root.join(METRICS_FILE)).unwrap();
    assert_eq!(metrics.len(), 16);
    assert!(root.join("results/records.json").is_file());

    let first = read_all(&root.join("report"));
    assert_eq!(first.len(), 6);
    let again = Pipeline::open(config(&root)).unwrap();
    again.run(None).unwrap();
    assert_eq!(read_all(&root.join("report")), first);
}

#[test]
fn report_with_second_annotator() {
    let dir = tempfile::tempdir().unwrap();
    let mut c = config(dir.path());
    c.query.annotations = Some(fixtures("annotations"));
    c.query.alternate = Some(fixtures("annotations_alt"));
    let pipeline = Pipeline::open(c).unwrap();
    let (report, written) = pipeline.report().unwrap();
    let d = report.disagreement.unwrap();
    assert_eq!((d.policies, d.queries), (16, 24));
    assert!(d.post > 0.0 && d.post < 0.5);
    assert!(written.iter().any(|p| p.ends_with("disagreement.csv")));
    assert_eq!(report.header.paired_policies, 0);
}

#[test]
fn empty_store_is_an_empty_corpus() {
    let dir = tempfile::tempdir().unwrap();
    let pipeline = Pipeline::open(config(dir.path())).unwrap();
    assert!(matches!(pipeline.run(None), Err(ReportError::EmptyCorpus)));
}

struct Keywords;

impl Labeler for Keywords {
    fn label(&self, texts: &[String]) -> Result<Vec<SegmentLabels>, LabelerError> {
        Ok(texts
            .iter()
            .map(|t| {
                let mut l = SegmentLabels::default();
                if t.contains("collect") {
                    l.categories.insert("first-party".into(), 0.9);
                }
                if t.contains("share") || t.contains("third-party") {
                    l.categories.insert("third-party".into(), 0.8);
                }
                if t.contains("retain") {
                    l.categories.insert("data-retention".into(), 0.7);
                }
                l
            })
            .collect())
    }
}

#[test]
fn annotate_stage_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("store");
    store::build(&root, 4);
    let pipeline = Pipeline::open(config(&root)).unwrap();
    let report = pipeline.run(Some(&Keywords)).unwrap();
    assert_eq!(report.header.annotated_policies, 4);
    let out = root.join("annotations");
    assert_eq!(fs::read_dir(&out).unwrap().count(), 8);

    fs::remove_file(out.join("site02.example.post.json")).unwrap();
    let again = pipeline.annotate(&Keywords, &out).unwrap();
    assert_eq!((again.written, again.skipped, again.failures.len()), (1, 7, 0));
}

#[test]
fn parse_sidecars_override_passive_index() {
    let dir = tempfile::tempdir().unwrap();
    let root = dir.path().join("store");
    store::build(&root, 2);
    let deps = dir.path().join("deps");
    fs::create_dir_all(&deps).unwrap();
    // Two sentences, one passive by the parse rule.
    fs::write(
        deps.join("site00.example.pre.dep"),
        "1 Data nsubjpass\n2 is auxpass\n3 kept ROOT\n\n1 We nsubj\n2 keep ROOT\n3 it dobj\n",
    )
    .unwrap();
    let mut c = config(&root);
    c.metrics.dep_annotations = Some(deps);
    let pipeline = Pipeline::open(c).unwrap();
    let manifest = pipeline.select_pairs().unwrap();
    let pairs = pipeline.metrics(&manifest, &root.join(METRICS_FILE)).unwrap();
    assert_eq!(pairs[0].pre.passive_index, Some(50.0));
    // No sidecar for the post version, so the lexical rule stands.
    let post_text = pipeline.store().read_text("site00.example", manifest.pairs[0].post).unwrap();
    assert_eq!(pairs[0].post.passive_index, polidiff::textmetrics::compute_metrics(&post_text).passive_index);
}
