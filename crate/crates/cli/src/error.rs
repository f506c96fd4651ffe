use std::path::Path;
use std::process::ExitCode;

use cumquant::classifiers::ClassifierError;
use cumquant::corpus::CorpusError;
use cumquant::harness::HarnessError;
use cumquant::quantifier::QuantError;
use thiserror::Error;

/// Failures split by the exit code they map to.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad arguments, configuration or input data.
    #[error("{0}")]
    Validation(String),
    /// Everything else: I/O, numerical failures, failed folds.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Validation(_) => ExitCode::from(1),
            CliError::Runtime(_) => ExitCode::from(2),
        }
    }

    pub fn io(path: &Path, e: std::io::Error) -> Self {
        CliError::Runtime(format!("{}: {e}", path.display()))
    }

    pub fn invalid(message: impl Into<String>) -> Self {
        CliError::Validation(message.into())
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        match e {
            CorpusError::Io { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<ClassifierError> for CliError {
    fn from(e: ClassifierError) -> Self {
        match e {
            ClassifierError::Io { .. } | ClassifierError::Diverged => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

impl From<QuantError> for CliError {
    fn from(e: QuantError) -> Self {
        match e {
            QuantError::EmptyResultSet | QuantError::InvalidSpec(_) | QuantError::SpecMismatch { .. } => {
                CliError::Validation(e.to_string())
            }
            _ => CliError::Runtime(e.to_string()),
        }
    }
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::InvalidSpec(_)
            | HarnessError::InfeasibleRates(_)
            | HarnessError::TooFewQueries { .. }
            | HarnessError::InvalidConfig(_)
            | HarnessError::Format { .. } => CliError::Validation(e.to_string()),
            HarnessError::Corpus(e) => e.into(),
            HarnessError::Quant(e) => e.into(),
            _ => CliError::Runtime(e.to_string()),
        }
    }
}
