use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// Bad input supplied by the caller: out-of-range parameter, inconsistent sizes, infeasible budget.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// The binary embedding file or its metadata sidecar could not be decoded.
    #[error("malformed embedding data: {0}")]
    Format(String),

    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    /// Brute-force oracle refused an instance beyond its combinatorial guard.
    #[error("instance too large for exhaustive search: n={n}, k={k} (limit n<={max_n}, k<={max_k})")]
    TooLarge { n: usize, k: usize, max_n: usize, max_k: usize },

    #[error("numerical failure: {0}")]
    Numerical(String),

    /// A report could not be serialized.
    #[error("could not write report: {0}")]
    Report(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::Invalid(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }

    /// True for errors caused by caller input rather than by the toolkit itself.
    pub fn is_validation(&self) -> bool {
        !matches!(self, Error::Numerical(_) | Error::Report(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
