use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use polidiff::changedetect::StableChoice;
use polidiff::YearMonth;

#[derive(Debug, Parser)]
#[command(name = "polidiff", version, about = "Track how privacy policies change across a cut-over date")]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Global {
    /// TOML config with one section per stage.
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,
    /// Snapshot store directory.
    #[arg(long, global = true, env = "POLIDIFF_STORE", value_name = "DIR")]
    pub store: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Cut-over month, YYYY-MM.
    #[arg(long, global = true, value_name = "YYYY-MM")]
    pub pivot: Option<YearMonth>,
    /// More log output; repeat for more.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find the policy link on each home page in a URL list.
    Discover {
        #[arg(long, value_name = "FILE")]
        input: Option<PathBuf>,
        /// Extra registrable domain a policy link may point to.
        #[arg(long = "allow", value_name = "DOMAIN")]
        allowed_domains: Vec<String>,
    },
    /// Download archived snapshots of every discovered policy.
    Fetch {
        #[arg(long, value_name = "YYYY-MM")]
        from: Option<YearMonth>,
        #[arg(long, value_name = "YYYY-MM")]
        to: Option<YearMonth>,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Strip boilerplate from raw snapshots.
    Extract {
        #[arg(long)]
        min_chars: Option<usize>,
    },
    /// Train, apply or query the policy gate.
    Gate {
        #[command(subcommand)]
        command: GateCommand,
    },
    /// Pick the before and after snapshot of each policy.
    SelectPairs {
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long, value_enum)]
        stable: Option<Stable>,
    },
    /// Segment selected snapshots and label them through a labeler endpoint.
    Annotate {
        #[arg(long, value_name = "URL")]
        labeler: Option<String>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        parallelism: Option<usize>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Text metrics of every selected pair.
    Metrics {
        /// Pairs manifest; defaults to the store's.
        #[arg(long, value_name = "FILE")]
        pairs: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        dep_annotations: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Evaluate label queries over annotated pairs.
    Query {
        /// all, cov, ico, spec, or comma-separated query ids.
        #[arg(long)]
        queries: Option<String>,
        #[arg(long, value_name = "DIR")]
        annotations: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
        /// Query catalog replacing the bundled one.
        #[arg(long, value_name = "FILE")]
        catalog: Option<PathBuf>,
    },
    /// Significance tests over stage outputs.
    Stats {
        #[command(subcommand)]
        command: StatsCommand,
    },
    /// Build the corpus report from the store.
    Report {
        #[arg(long, value_name = "DIR")]
        annotations: Option<PathBuf>,
        /// Second annotation source for the disagreement section.
        #[arg(long, value_name = "DIR")]
        alternate: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        catalog: Option<PathBuf>,
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Run every configured stage in order, then the report.
    Run,
}

#[derive(Debug, Subcommand)]
pub enum GateCommand {
    /// Train on `<corpus>/policy/*.txt` and `<corpus>/other/*.txt`.
    Train {
        #[arg(long, value_name = "DIR")]
        corpus: PathBuf,
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Print a verdict per text file.
    Classify {
        #[arg(long, value_name = "FILE")]
        model: PathBuf,
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Gate every extracted snapshot in the store.
    Apply {
        #[arg(long, value_name = "FILE")]
        model: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand)]
pub enum StatsCommand {
    /// Signed-rank test per text metric.
    MetricsTest {
        /// Metrics table written by `metrics`.
        #[arg(long, value_name = "FILE")]
        pairs: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
    },
    /// Chi-squared test per coverage query.
    CoverageTest {
        /// Directory written by `query`.
        #[arg(long, value_name = "DIR")]
        results: Option<PathBuf>,
        #[arg(long, value_name = "FILE")]
        catalog: Option<PathBuf>,
        #[arg(long)]
        alpha: Option<f64>,
    },
}

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
pub enum Stable {
    Latest,
    Earliest,
}

impl From<Stable> for StableChoice {
    fn from(s: Stable) -> Self {
        match s {
            Stable::Latest => StableChoice::Latest,
            Stable::Earliest => StableChoice::Earliest,
        }
    }
}
