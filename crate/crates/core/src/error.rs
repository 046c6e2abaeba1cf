use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// A numeric parameter violates its type invariant.
    #[error("{name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("innovation variance {value:e} at step {step} is not positive")]
    NonPositiveInnovation { step: usize, value: f64 },

    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("gain schedule covers {available} steps, {requested} requested")]
    HorizonMismatch { available: usize, requested: usize },

    /// An emitted dataset failed its own consistency check.
    #[error("dataset check failed: {0}")]
    DatasetCheck(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },

    #[error("config: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
