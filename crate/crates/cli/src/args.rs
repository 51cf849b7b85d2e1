use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use soc_core::classify::Algorithm;
use soc_core::corpus::DataFormat;
use soc_core::pipeline::Representation;

#[derive(Debug, Parser)]
#[command(
    name = "soc",
    version,
    about = "Predict SOC occupation codes from job descriptions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate or inspect datasets.
    #[command(subcommand)]
    Data(DataCommand),
    /// Fit a vectorizer and classifier on a dataset and save the pipeline.
    Train(TrainArgs),
    /// Cross-validate every representation/classifier pair and write reports.
    Benchmark(BenchmarkArgs),
    /// Predict SOC codes with a saved pipeline.
    Predict(PredictArgs),
    /// Serve a saved pipeline over HTTP.
    Serve(ServeArgs),
}

#[derive(Debug, Subcommand)]
pub enum DataCommand {
    /// Write a synthetic labelled dataset.
    Synth(SynthArgs),
    /// Print size, label distribution and fingerprint of a dataset.
    Inspect(InspectArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum FormatArg {
    Csv,
    Jsonl,
}

impl From<FormatArg> for DataFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Csv => DataFormat::Csv,
            FormatArg::Jsonl => DataFormat::Jsonl,
        }
    }
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Output file.
    #[arg(long)]
    pub out: PathBuf,
    /// Output format [default: from the file extension, csv otherwise]
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Number of classes.
    #[arg(long, default_value_t = 5)]
    pub classes: usize,
    /// Documents per class.
    #[arg(long, default_value_t = 400)]
    pub docs_per_class: usize,
    /// Distinct words characteristic of each class.
    #[arg(long, default_value_t = 30)]
    pub vocab_per_class: usize,
    /// Fraction of each document drawn from shared noise words.
    #[arg(long, default_value_t = 0.2)]
    pub noise: f64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct DataInput {
    /// Dataset file (CSV with a header row, or JSON lines).
    #[arg(long)]
    pub data: PathBuf,
    /// Input format [default: from the file extension, csv otherwise]
    #[arg(long, value_enum)]
    pub format: Option<FormatArg>,
    /// Keep only the K most frequent SOC codes.
    #[arg(long, value_name = "K")]
    pub top_k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct InspectArgs {
    #[command(flatten)]
    pub input: DataInput,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

/// Hyperparameters. Unset flags fall back to the config file, then to the
/// defaults shown.
#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// JSON config file merged under the command-line flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Smallest n-gram length [default: 1]
    #[arg(long)]
    pub ngram_min: Option<usize>,
    /// Largest n-gram length [default: 10]
    #[arg(long)]
    pub ngram_max: Option<usize>,
    /// Minimum document frequency as a fraction of documents, inclusive [default: 0.10]
    #[arg(long)]
    pub min_df: Option<f64>,
    /// Maximum document frequency as a fraction of documents, inclusive [default: 0.90]
    #[arg(long)]
    pub max_df: Option<f64>,
    /// Paragraph-vector dimension [default: 100]
    #[arg(long)]
    pub dim: Option<usize>,
    /// Paragraph-vector training epochs [default: 20]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// Negative samples per positive pair [default: 5]
    #[arg(long)]
    pub negative: Option<usize>,
    /// Minimum corpus count for a token to enter the embedding vocabulary [default: 2]
    #[arg(long)]
    pub min_count: Option<u64>,
    /// Seed of the paragraph-vector model [default: 1]
    #[arg(long)]
    pub embed_seed: Option<u64>,
    /// Training threads for paragraph vectors; above 1 is not bit-reproducible [default: 1]
    #[arg(long)]
    pub embed_workers: Option<usize>,
    /// Neighbours for knn [default: 3]
    #[arg(long)]
    pub k: Option<usize>,
    /// Trees in the random forest [default: 100]
    #[arg(long)]
    pub estimators: Option<usize>,
    /// SVM regularization C, for linear_svm and svc_rbf [default: 1.0]
    #[arg(long)]
    pub c: Option<f64>,
    /// L2 strength for logreg [default: 1.0]
    #[arg(long)]
    pub l2: Option<f64>,
    /// Depth limit for tree and forest [default: unlimited]
    #[arg(long)]
    pub max_depth: Option<usize>,
    /// Seed for the stochastic classifiers (linear_svm, tree, forest) [default: 0]
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[command(flatten)]
    pub input: DataInput,
    /// Where to write the pipeline file.
    #[arg(long)]
    pub out: PathBuf,
    /// Text representation [default: tfidf]
    #[arg(long)]
    pub representation: Option<Representation>,
    /// Classifier: knn, gnb, logreg, linear_svm, svc_rbf, tree or forest [default: svc_rbf]
    #[arg(long)]
    pub algorithm: Option<Algorithm>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Print the summary as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ReportFormatArg {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Args)]
pub struct BenchmarkArgs {
    #[command(flatten)]
    pub input: DataInput,
    /// Directory for report.csv, folds.csv, report.json and the five charts.
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Cross-validation folds [default: 10]
    #[arg(long)]
    pub folds: Option<usize>,
    /// Seed of the fold shuffle [default: 0]
    #[arg(long)]
    pub cv_seed: Option<u64>,
    /// Restrict to REPRESENTATION:ALGORITHM pairs, e.g. tfidf:svc_rbf (repeatable) [default: all 14]
    #[arg(long, value_name = "REP:ALGO")]
    pub only: Vec<String>,
    /// Report formats to write [default: csv,json,svg]
    #[arg(long, value_enum, value_delimiter = ',')]
    pub formats: Vec<ReportFormatArg>,
    #[command(flatten)]
    pub model: ModelArgs,
    /// Print the summary table as JSON.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Pipeline file written by `soc train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Job description to classify.
    #[arg(conflicts_with = "input", required_unless_present = "input")]
    pub description: Option<String>,
    /// File with one description per line; blank lines are skipped.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Print one JSON object per description.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct ServeArgs {
    /// Pipeline file written by `soc train`.
    #[arg(long, env = "SOC_MODEL")]
    pub model: PathBuf,
    /// Address to bind.
    #[arg(long, env = "SOC_HOST", default_value = "127.0.0.1")]
    pub host: String,
    /// Port to bind; 0 picks a free port.
    #[arg(long, env = "SOC_PORT", default_value_t = 8080)]
    pub port: u16,
    /// Largest accepted request body in bytes.
    #[arg(long, default_value_t = soc_server::DEFAULT_BODY_LIMIT)]
    pub body_limit: usize,
    /// Per-request timeout in seconds.
    #[arg(long, default_value_t = 30)]
    pub timeout_s: u64,
}
