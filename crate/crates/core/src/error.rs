use thiserror::Error;

/// Errors raised by the library. Variants map onto the CLI exit codes:
/// parameter problems are usage errors, everything else is a computation error.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("pattern file line {line}: {reason}")]
    PatternFormat { line: usize, reason: String },

    #[error("{what} exceeds cap: {size} > {cap}")]
    CapExceeded { what: &'static str, size: String, cap: String },

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("no convergence after {iterations} iterations")]
    NotConverged { iterations: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    /// True for errors caused by bad input rather than by the computation.
    pub fn is_usage(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::LengthMismatch { .. } | Error::PatternFormat { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
