use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use cumquant::classifiers::ClassifierKind;
use cumquant::corpus::InputFormat;
use cumquant::quantifier::QuantMethod;

/// Cumulative quantification of sentiment categories over query result sets.
///
/// Settings resolve as: command-line flag, then the `--config` file, then the
/// built-in default. The seed additionally falls back to `CUMQUANT_SEED`
/// before the default of 0.
#[derive(Debug, Parser)]
#[command(name = "cumquant", version)]
pub struct Cli {
    /// TOML file with default settings.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads; defaults to one per core. Outputs do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a labeled synthetic corpus directory.
    Synth(SynthArgs),
    /// Convert a JSONL or TSV record file into a corpus directory.
    Ingest(IngestArgs),
    /// Train a classifier and its quantifiers on a corpus directory.
    Train(TrainArgs),
    /// Estimate category shares per query with a trained model.
    Quantify(QuantifyArgs),
    /// Leave-one-query-out evaluation, written as a report directory.
    Loo(LooArgs),
    /// Rebuild a report directory from saved fold results.
    Report(ReportArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Number of queries [default: 29]
    #[arg(long)]
    pub queries: Option<usize>,
    /// Classifier noise: separable, easy, medium or hard [default: medium]
    #[arg(long)]
    pub preset: Option<String>,
    /// Median result-set size [default: 30741]
    #[arg(long)]
    pub size_median: Option<f64>,
    /// Mean result-set size [default: 105564]
    #[arg(long)]
    pub size_mean: Option<f64>,
    /// Multiplies median and mean sizes [default: 1]
    #[arg(long)]
    pub scale: Option<f64>,
    /// Mean tokens per document [default: 12]
    #[arg(long)]
    pub doc_length: Option<f64>,
    /// Make every document P or N, with N rate = 1 - P rate.
    #[arg(long)]
    pub complement: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    #[arg(long, value_name = "FILE")]
    pub input: PathBuf,
    /// jsonl or tsv; guessed from the extension when absent.
    #[arg(long)]
    pub format: Option<InputFormat>,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
}

/// Classifier hyperparameters.
#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// Naive Bayes per-term smoothing [default: 1]
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Divergence model smoothing [default: 0.01]
    #[arg(long)]
    pub smoothing: Option<f64>,
    /// SVM margin band for the cumulative measures [default: 1]
    #[arg(long)]
    pub margin: Option<f64>,
    /// SVM training epochs [default: 20]
    #[arg(long)]
    pub epochs: Option<usize>,
    /// SVM L2 regularization [default: 0.0001]
    #[arg(long)]
    pub reg: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Feature options of the query-driven regression.
#[derive(Debug, Args, Default)]
pub struct FeatureArgs {
    /// Regress raw measures on counts instead of normalized measures on rates.
    #[arg(long)]
    pub no_normalize: bool,
    /// Add the result-set size as a regressor.
    #[arg(long)]
    pub include_size: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    /// mnb, dbm or svm [default: mnb]
    #[arg(long)]
    pub classifier: Option<ClassifierKind>,
    #[arg(long, value_name = "FILE")]
    pub out: PathBuf,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct QuantifyArgs {
    #[arg(long, value_name = "FILE")]
    pub model: PathBuf,
    /// Corpus directory whose result sets are quantified.
    #[arg(long, value_name = "DIR", conflicts_with = "input", required_unless_present = "input")]
    pub corpus: Option<PathBuf>,
    /// Record file of result-set documents, grouped by their query field.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    /// Dictionary the model was trained against; required with --input.
    #[arg(long, value_name = "FILE")]
    pub dictionary: Option<PathBuf>,
    /// Format of --input; guessed from the extension when absent.
    #[arg(long)]
    pub format: Option<InputFormat>,
    /// Methods to apply, comma-separated [default: all the model supports]
    #[arg(long, value_delimiter = ',')]
    pub quantifier: Vec<QuantMethod>,
    /// Query id given to documents without one.
    #[arg(long, default_value = "all")]
    pub default_query: String,
    /// Estimates CSV; standard output when absent.
    #[arg(long, value_name = "FILE")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct LooArgs {
    #[arg(long, value_name = "DIR")]
    pub corpus: PathBuf,
    #[arg(long, value_name = "DIR")]
    pub out: PathBuf,
    /// Classifiers, comma-separated [default: mnb,dbm,svm]
    #[arg(long, value_delimiter = ',')]
    pub classifier: Vec<ClassifierKind>,
    /// Quantifiers, comma-separated [default: cc,acc,phi-query,phi-item]
    #[arg(long, value_delimiter = ',')]
    pub quantifier: Vec<QuantMethod>,
    /// Validation sample fraction; estimated from the labeled data when absent.
    #[arg(long)]
    pub sigma: Option<f64>,
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub features: FeatureArgs,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    /// Report directory holding runs.json and run.json.
    #[arg(long, value_name = "DIR")]
    pub runs: PathBuf,
    /// Where to write the rebuilt report [default: the --runs directory]
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
}
