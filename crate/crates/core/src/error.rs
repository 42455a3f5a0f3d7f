use std::path::PathBuf;

use thiserror::Error;

/// Errors raised across the pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("incompatible units: cannot convert {from} to {to}")]
    Units { from: String, to: String },

    #[error("dimension mismatch: {0}")]
    Dimensions(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("rank-deficient design: {0}")]
    RankDeficient(String),

    #[error("zero-width ratio range: {0}")]
    ZeroWidthRange(String),

    #[error("configuration mismatch: {0}")]
    ConfigMismatch(String),

    #[error("insufficient input: expected {expected}, found {found} ({what})")]
    Insufficient {
        what: String,
        expected: usize,
        found: usize,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// True for failures caused by reading or writing files.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
