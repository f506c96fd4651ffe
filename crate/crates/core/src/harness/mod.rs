//! End-to-end experiments: synthetic corpora, leave-one-out runs over
//! queries, and report assembly.

mod loo;
mod report;
mod synth;

use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::CorpusError;
use crate::quantifier::QuantError;
use crate::stats::StatsError;

pub use loo::{observed_shares, run_loo, ClassifierMeasure, FoldStatus, LooConfig, LooRun, MethodOutcome};
pub use report::{
    assemble_report, read_runs, write_report, CategoryReport, Cell, ExperimentReport, MeasureCorrelation,
    MethodReport, Outcome, RunInfo, read_run_info, ESTIMATES_FILE, RUNS_FILE, RUN_FILE,
};
pub use synth::{generate_synthetic, Divergence, NegativeRates, RateRange, SynthSpec, SynthStats, VocabSpec};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid synthetic corpus specification: {0}")]
    InvalidSpec(String),
    #[error("infeasible rate ranges: {0}")]
    InfeasibleRates(String),
    #[error("leave-one-out needs at least {needed} queries, got {got}")]
    TooFewQueries { needed: usize, got: usize },
    #[error("report needs at least {needed} successful folds, got {got}")]
    TooFewFolds { needed: usize, got: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Quant(#[from] QuantError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: String, message: String },
}

impl HarnessError {
    pub(crate) fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        HarnessError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }
}

/// Independent 64-bit seed for a named sub-stream of `seed`.
pub fn derive_seed(seed: u64, label: &str) -> u64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(label.as_bytes());
    let digest = hasher.finalize();
    u64::from_le_bytes(digest[..8].try_into().expect("digest has 32 bytes"))
}
