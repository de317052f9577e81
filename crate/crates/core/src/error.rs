use std::path::PathBuf;

use thiserror::Error;

use crate::classifiers::FitError;
use crate::corpus::CorpusError;
use crate::eval::EvalError;
use crate::neural::NeuralError;
use crate::textprep::TextprepError;
use crate::vectorize::VectorizeError;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Coarse classification of failures, used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Usage,
    Data,
    Numeric,
}

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Textprep(#[from] TextprepError),
    #[error(transparent)]
    Vectorize(#[from] VectorizeError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Neural(#[from] NeuralError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("artifact format version {found} is not supported (expected {expected})")]
    Version { found: u64, expected: u64 },
    #[error("artifact schema error at `{path}`: {message}")]
    Schema { path: String, message: String },
    #[error("inconsistent artifact: {0}")]
    Inconsistent(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn stage(stage: &'static str, source: impl Into<Error>) -> Self {
        Error::Stage {
            stage,
            source: Box::new(source.into()),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Stage { source, .. } => source.category(),
            Error::Config(_) => ErrorCategory::Usage,
            Error::Fit(e) if e.is_numeric() => ErrorCategory::Numeric,
            Error::Neural(e) if e.is_numeric() => ErrorCategory::Numeric,
            _ => ErrorCategory::Data,
        }
    }
}
