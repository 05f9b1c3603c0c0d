use thiserror::Error;

use crate::spectral::TruncatedSvd;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension error: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("inconsistent inputs: {0}")]
    Consistency(String),

    #[error("duplicate coordinate ({row}, {col})")]
    DuplicateCoordinate { row: usize, col: usize },

    #[error("non-finite value at ({row}, {col})")]
    NonFinite { row: usize, col: usize },

    /// Iteration budget exhausted; carries the best iterate found.
    #[error("no convergence after {} iterations (max residual {:.3e})", .0.iterations, .0.max_residual)]
    NotConverged(Box<TruncatedSvd>),

    #[error("refusing to enumerate: {0}")]
    SizeGuard(String),

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        Error::Parameter(msg.into())
    }

    pub(crate) fn dim(msg: impl Into<String>) -> Self {
        Error::Dimension(msg.into())
    }

    /// Unwraps the best iterate of a convergence failure, or passes other errors through.
    pub fn into_best_iterate(self) -> Result<TruncatedSvd> {
        match self {
            Error::NotConverged(best) => Ok(*best),
            other => Err(other),
        }
    }
}
