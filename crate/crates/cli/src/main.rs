mod cli;

use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::error::ErrorKind;
use clap::Parser;
use polidiff::annotation::HttpLabeler;
use polidiff::changedetect::PairsManifest;
use polidiff::policygate::{classify_policy, load_labeled_corpus, train_gate, LinearTextModel, TrainConfig};
use polidiff::report::{
    coverage_tests, metric_tests, read_metrics_csv, run_pipeline, CoverageTest, MetricTest, Pipeline, PipelineConfig,
    TestSummary, METRICS_FILE, RECORDS_FILE,
};

use cli::{Cli, Command, GateCommand, Global, StatsCommand};

const GATE_MODEL_FILE: &str = "gate-model.json";

/// A request that cannot run as given; exits with the usage status.
#[derive(Debug)]
struct Usage(String);

impl fmt::Display for Usage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for Usage {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(Usage(msg.into()).into())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(1);
        }
    };
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.downcast_ref::<Usage>().is_some() => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

/// Config file first, then command-line flags and `POLIDIFF_STORE`.
fn load_config(global: &Global) -> Result<PipelineConfig> {
    let mut config = match &global.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    if let Some(store) = &global.store {
        config.store = Some(store.clone());
    }
    if let Some(seed) = global.seed {
        config.seed = Some(seed);
    }
    if let Some(pivot) = global.pivot {
        config.pivot = Some(pivot);
    }
    Ok(config)
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli.global)?;
    match cli.command {
        Command::Discover { input, allowed_domains } => {
            config.discover.allowed_domains.extend(allowed_domains);
            let Some(input) = input.or(config.discover.input.clone()) else {
                return usage("discover needs --input or [discover] input");
            };
            let d = Pipeline::open(config)?.discover(&input)?;
            println!("discovered {} policies, {} failures", d.policies.len(), d.failures.len());
            for (url, reason) in &d.failures {
                println!("  failed {url}: {reason}");
            }
        }
        Command::Fetch { from, to, workers } => {
            if let Some(w) = workers {
                config.fetch.pool.workers = w;
            }
            let (Some(from), Some(to)) = (from.or(config.fetch.from), to.or(config.fetch.to)) else {
                return usage("fetch needs --from and --to, or [fetch] from and to");
            };
            let r = Pipeline::open(config)?.fetch(from, to)?;
            println!("fetched {} snapshots, {} unchanged, {} failures", r.written, r.unchanged, r.failures.len());
            for (id, reason) in &r.failures {
                println!("  failed {id}: {reason}");
            }
        }
        Command::Extract { min_chars } => {
            if let Some(m) = min_chars {
                config.extract.min_chars = m;
            }
            let r = Pipeline::open(config)?.extract()?;
            println!("extracted {}, rejected {}", r.extracted, r.rejected);
        }
        Command::Gate { command } => gate(config, command)?,
        Command::SelectPairs { threshold, stable } => {
            if let Some(t) = threshold {
                config.pairs.threshold = t;
            }
            if let Some(s) = stable {
                config.pairs.stable = s.into();
            }
            let m = Pipeline::open(config)?.select_pairs()?;
            let unchanged = m.pairs.iter().filter(|p| p.unchanged).count();
            println!("selected {} pairs ({} unchanged), skipped {}", m.pairs.len(), unchanged, m.skipped.len());
        }
        Command::Annotate { labeler, batch_size, parallelism, out } => {
            if batch_size.is_some() {
                config.annotate.batch_size = batch_size;
            }
            if let Some(p) = parallelism {
                config.annotate.parallelism = p;
            }
            let Some(url) = labeler.or(config.annotate.labeler.clone()) else {
                return usage("annotate needs --labeler or [annotate] labeler");
            };
            let labeler = HttpLabeler::new(url, config.http_config());
            let pipeline = Pipeline::open(config)?;
            let out = out.unwrap_or_else(|| pipeline.annotations_dir());
            let r = pipeline.annotate(&labeler, &out)?;
            println!("annotated {}, kept {}, failures {}", r.written, r.skipped, r.failures.len());
            for (id, reason) in &r.failures {
                println!("  failed {id}: {reason}");
            }
        }
        Command::Metrics { pairs, dep_annotations, out } => {
            if dep_annotations.is_some() {
                config.metrics.dep_annotations = dep_annotations;
            }
            let pipeline = Pipeline::open(config)?;
            let manifest = match pairs {
                Some(path) => PairsManifest::load_path(&path)?,
                None => pipeline.pairs_manifest("metrics")?,
            };
            let out = out.unwrap_or_else(|| pipeline.store().root().join(METRICS_FILE));
            let rows = pipeline.metrics(&manifest, &out)?;
            println!("wrote metrics for {} pairs to {}", rows.len(), out.display());
        }
        Command::Query { queries, annotations, out, catalog } => {
            if let Some(q) = queries {
                config.query.queries = q;
            }
            if catalog.is_some() {
                config.query.catalog = catalog;
            }
            let pipeline = Pipeline::open(config)?;
            let annotations = annotations.unwrap_or_else(|| pipeline.annotations_dir());
            let out = out.unwrap_or_else(|| pipeline.store().root().join("results"));
            let records = pipeline.query(&annotations, &out)?;
            println!("wrote {} records to {}", records.len(), out.join("records.json").display());
        }
        Command::Stats { command } => stats(config, command)?,
        Command::Report { annotations, alternate, catalog, out } => {
            if annotations.is_some() {
                config.query.annotations = annotations;
            }
            if alternate.is_some() {
                config.query.alternate = alternate;
            }
            if catalog.is_some() {
                config.query.catalog = catalog;
            }
            if out.is_some() {
                config.report.out = out;
            }
            let (_, written) = Pipeline::open(config)?.report()?;
            for path in written {
                println!("{}", path.display());
            }
        }
        Command::Run => {
            let report = run_pipeline(&config)?;
            println!(
                "report: {} pairs, {} annotated policies, {} queries",
                report.header.paired_policies,
                report.header.annotated_policies,
                report.queries.len()
            );
        }
    }
    Ok(())
}

fn gate(config: PipelineConfig, command: GateCommand) -> Result<()> {
    match command {
        GateCommand::Train { corpus, out, epochs, threshold } => {
            let mut train = TrainConfig { seed: config.seed(), ..TrainConfig::default() };
            if let Some(e) = epochs {
                train.epochs = e;
            }
            if let Some(t) = threshold {
                train.threshold = t;
            }
            let docs = load_labeled_corpus(&corpus).with_context(|| format!("reading {}", corpus.display()))?;
            let model = train_gate(&docs, &train)?;
            let out = match out {
                Some(p) => p,
                None => config.store_path().join(GATE_MODEL_FILE),
            };
            if let Some(parent) = out.parent() {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            model.save(&out)?;
            if let Some(meta) = &model.meta {
                println!(
                    "held-out accuracy {:.4} ({} train, {} test, seed {}, {} leaked duplicates)",
                    meta.held_out_accuracy, meta.train_size, meta.test_size, meta.seed, meta.leaked_duplicates
                );
            }
            println!("model written to {}", out.display());
        }
        GateCommand::Classify { model, files } => {
            let model = LinearTextModel::load(&model).with_context(|| format!("loading {}", model.display()))?;
            for file in files {
                let text = std::fs::read_to_string(&file).with_context(|| format!("reading {}", file.display()))?;
                let v = classify_policy(&text, &model);
                let reason = match &v.verdict {
                    polidiff::policygate::Verdict::Valid => "valid".to_string(),
                    polidiff::policygate::Verdict::Invalid(r) => format!("invalid({r})"),
                };
                let p = v.policy_probability.map_or("-".to_string(), |p| format!("{p:.4}"));
                println!("{}\t{reason}\tenglish={:.4}\tpolicy={p}", file.display(), v.language_confidence);
            }
        }
        GateCommand::Apply { model } => {
            let model =
                model.or(config.gate.model.clone()).unwrap_or_else(|| config.store_path().join(GATE_MODEL_FILE));
            let r = Pipeline::open(config)?.gate(&model)?;
            println!("gate: {} valid, {} rejected", r.valid, r.rejected.len());
            for (id, month, reason) in &r.rejected {
                println!("  {id} {month}: {reason}");
            }
        }
    }
    Ok(())
}

fn test_cells(t: Option<&TestSummary>, note: Option<&String>) -> String {
    match t {
        Some(t) => format!(
            "{:>10.4} {:>4} {:>12} {:>8.6} {}",
            t.statistic,
            t.df.map_or("-".to_string(), |d| d.to_string()),
            t.p_value,
            t.alpha_effective,
            if t.reject { "reject" } else { "keep" }
        ),
        None => format!("untested: {}", note.map_or("", |n| n.as_str())),
    }
}

fn print_metric_table(rows: &[MetricTest]) {
    println!(
        "{:<20} {:>5} {:>10} {:>10} {:>10} {:>10} {:>10} {:>4} {:>12} {:>8} result",
        "metric", "n", "pre_mean", "pre_std", "post_mean", "post_std", "statistic", "df", "p", "alpha"
    );
    for m in rows {
        println!(
            "{:<20} {:>5} {:>10.4} {:>10.4} {:>10.4} {:>10.4} {}",
            m.metric,
            m.n,
            m.pre_mean,
            m.pre_std,
            m.post_mean,
            m.post_std,
            test_cells(m.test.as_ref(), m.note.as_ref())
        );
    }
}

fn print_coverage_table(rows: &[CoverageTest]) {
    println!(
        "{:<8} {:<34} {:>5} {:>8} {:>8} {:>10} {:>4} {:>12} {:>8} result",
        "query", "category", "n", "pre_%", "post_%", "statistic", "df", "p", "alpha"
    );
    for c in rows {
        println!(
            "{:<8} {:<34} {:>5} {:>8.4} {:>8.4} {}",
            c.query_id,
            c.category,
            c.n,
            c.pre_percent,
            c.post_percent,
            test_cells(c.test.as_ref(), c.note.as_ref())
        );
    }
}

fn existing(path: PathBuf, what: &str) -> Result<PathBuf> {
    if Path::new(&path).exists() {
        Ok(path)
    } else {
        usage(format!("{what} {} not found", path.display()))
    }
}

fn stats(mut config: PipelineConfig, command: StatsCommand) -> Result<()> {
    match command {
        StatsCommand::MetricsTest { pairs, alpha } => {
            let alpha = alpha.unwrap_or(config.report.alpha);
            let path = existing(pairs.unwrap_or_else(|| config.store_path().join(METRICS_FILE)), "metrics table")?;
            let rows = read_metrics_csv(&path)?;
            print_metric_table(&metric_tests(&rows, alpha));
        }
        StatsCommand::CoverageTest { results, catalog, alpha } => {
            let alpha = alpha.unwrap_or(config.report.alpha);
            if catalog.is_some() {
                config.query.catalog = catalog;
            }
            let records_file = match results {
                Some(dir) => dir.join("records.json"),
                None => config.store_path().join(RECORDS_FILE),
            };
            let records_file = existing(records_file, "query records")?;
            let records = Pipeline::read_records(&records_file)?;
            let engine = Pipeline::open(config)?.engine()?;
            print_coverage_table(&coverage_tests(&engine, &records, alpha));
        }
    }
    Ok(())
}
