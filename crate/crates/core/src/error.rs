use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An eigenvalue or pivot fell at or below the rank tolerance.
    #[error("rank deficiency at index {index}: value {value:e} <= tolerance {tolerance:e}")]
    RankDeficient {
        /// 1-based index of the failing eigenvalue or pivot.
        index: usize,
        value: f64,
        tolerance: f64,
    },

    #[error("eigensolver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("malformed table: {0}")]
    Table(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }

    /// Whether the error stems from a numerically singular quantity.
    pub fn is_rank_deficiency(&self) -> bool {
        matches!(self, Error::RankDeficient { .. })
    }
}
