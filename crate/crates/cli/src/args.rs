use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Visualization design knowledge base: enumerate, augment, label, train
/// and evaluate design preferences.
///
/// Every command talks to a vizkb service. Without `--server` one is
/// started in-process on a loopback port for the duration of the command.
/// Data goes to `--out` (or stdout); a one-line JSON summary goes to
/// stdout when `--out` is set and to stderr otherwise. With `--out`, a
/// `<out>.meta.json` sidecar records the command and seed.
#[derive(Debug, Parser)]
#[command(name = "vizkb", version)]
pub struct Cli {
    /// Base URL of a running service, e.g. http://127.0.0.1:8080.
    #[arg(long, global = true, env = "VIZKB_SERVER")]
    pub server: Option<String>,

    /// Project configuration (TOML).
    #[arg(long, global = true, env = "VIZKB_CONFIG")]
    pub config: Option<PathBuf>,

    /// Output file; defaults to stdout.
    #[arg(long, short, global = true)]
    pub out: Option<PathBuf>,

    /// RNG seed; defaults to the config's seed.
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Drop timestamps from label records so reruns are byte-identical.
    #[arg(long, global = true)]
    pub no_timestamps: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a chart spec against the hard constraints.
    Validate(SpecArgs),
    /// Feature counts of a chart spec.
    Features(SpecArgs),
    /// Cost of a chart spec under the current or given weights.
    Cost(SpecArgs),
    /// Complete a partial spec into valid designs (JSONL of specs).
    Enumerate(EnumerateArgs),
    /// Generate design pairs.
    #[command(subcommand)]
    Augment(AugmentCommand),
    /// Feature frequencies of a corpus and the under-covered features.
    Coverage(CoverageArgs),
    /// Empirical provoke/contradict relations between features.
    Deps(DepsArgs),
    /// Label pairs.
    #[command(subcommand)]
    Label(LabelCommand),
    /// Fit weights to labeled pairs (CSV, or JSON when --out ends in .json).
    Train(TrainArgs),
    /// Holdout split plus k-fold cross-validation.
    Cv(CvArgs),
    /// Compliance accuracy of weights on labeled pairs.
    Eval(EvalArgs),
    /// Comparison reports.
    #[command(subcommand)]
    Report(ReportCommand),
    /// Run the HTTP service for the labeling UI.
    Serve(ServeArgs),
}

#[derive(Debug, Args)]
pub struct SpecArgs {
    /// Chart spec (JSON).
    #[arg(long)]
    pub spec: PathBuf,
    /// Weight table (CSV or JSON) overriding the service's weights.
    #[arg(long)]
    pub weights: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EnumerateArgs {
    /// Partial spec (JSON).
    #[arg(long)]
    pub partial: PathBuf,
    /// Features that must be present.
    #[arg(long, value_delimiter = ',')]
    pub force: Vec<String>,
    /// Features that must be absent.
    #[arg(long, value_delimiter = ',')]
    pub forbid: Vec<String>,
    #[arg(long)]
    pub max_results: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum AugmentCommand {
    /// New pairs reproducing each pair's primitive difference in new contexts.
    Primitive {
        /// Pair corpus (JSONL).
        #[arg(long)]
        corpus: PathBuf,
        /// New pairs per origin; defaults to the config.
        #[arg(long)]
        max_new: Option<usize>,
    },
    /// Pairs ablating under-covered features, optionally in couples.
    Feature {
        /// JSON list of partial specs supplying the designs.
        #[arg(long)]
        partials: PathBuf,
        /// Corpus used for coverage (JSONL).
        #[arg(long)]
        corpus: Option<PathBuf>,
        /// Features to ablate; defaults to the under-covered ones.
        #[arg(long, value_delimiter = ',')]
        features: Vec<String>,
        /// Also ablate admissible feature couples.
        #[arg(long)]
        binary: bool,
        #[arg(long)]
        threshold: Option<u64>,
        /// Per-feature ablation results (JSON).
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// All-against-all pairs of the cheapest designs per data spec.
    Seed {
        /// JSON list of data specs; defaults to the built-in ten.
        #[arg(long)]
        specs: Option<PathBuf>,
        /// Weights that rank and label the designs (CSV or JSON).
        #[arg(long)]
        weights: Option<PathBuf>,
        /// Designs kept per data spec.
        #[arg(long)]
        top: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct CoverageArgs {
    /// Pair corpus (JSONL); an empty corpus when omitted.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub threshold: Option<u64>,
}

#[derive(Debug, Args)]
pub struct DepsArgs {
    /// JSON list of partial specs whose completions form the probe set.
    #[arg(long)]
    pub partials: PathBuf,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum LabelCommand {
    /// Train the pair classifier on labeled pairs and label the rest.
    Classify {
        #[arg(long)]
        labeled: PathBuf,
        #[arg(long)]
        unlabeled: PathBuf,
    },
    /// Ask a chat model, in both orientations. The service reads the key
    /// from VIZKB_LLM_API_KEY.
    Llm {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long)]
        endpoint: Option<String>,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        concurrency: Option<usize>,
        /// Request/response transcripts (JSONL); defaults to
        /// `<out>.transcripts.jsonl`, or `llm-transcripts.jsonl` without --out.
        #[arg(long)]
        audit: Option<PathBuf>,
    },
    /// Append label records (JSONL) to the service's store.
    Import {
        #[arg(long)]
        labels: PathBuf,
    },
    /// Label records of legible pairs (JSONL).
    Export,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Family {
    Logistic,
    LinearSvm,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Labeled pairs (JSONL).
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    pub family: Family,
    #[arg(long)]
    pub lambda: Option<f64>,
    /// Where to write the raw coefficients with training metadata (JSON).
    #[arg(long)]
    pub coefficients: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long, value_enum, default_value = "logistic")]
    pub family: Family,
    #[arg(long, default_value_t = 5)]
    pub folds: usize,
    #[arg(long, default_value_t = 0.15)]
    pub holdout: f64,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Slice {
    Source,
    LabelProvenance,
    Group,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub pairs: PathBuf,
    #[arg(long)]
    pub weights: Option<PathBuf>,
    /// Extra breakdowns besides the overall accuracy.
    #[arg(long, value_enum, value_delimiter = ',')]
    pub slice: Vec<Slice>,
}

#[derive(Debug, Subcommand)]
pub enum ReportCommand {
    /// Per-feature weight change times feature frequency (CSV, or JSON
    /// when --out ends in .json).
    Shift {
        #[arg(long)]
        before: PathBuf,
        #[arg(long)]
        after: PathBuf,
        /// Corpus giving feature frequencies.
        #[arg(long)]
        corpus: Option<PathBuf>,
    },
    /// Cosine similarity between the feature vectors of pair groups.
    Cosine {
        /// `NAME=pairs.jsonl`, repeated.
        #[arg(long = "group", required = true)]
        groups: Vec<String>,
    },
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub addr: String,
    /// Pair corpus (JSONL); overrides the config.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Label store directory; overrides the config.
    #[arg(long)]
    pub labels: Option<PathBuf>,
}
