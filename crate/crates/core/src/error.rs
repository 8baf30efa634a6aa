use std::path::PathBuf;

use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("index out of range: {0}")]
    Index(String),

    #[error("stale cache: {0}")]
    State(String),

    #[error("malformed {what} at byte offset {offset}: {reason}")]
    Format {
        what: String,
        offset: u64,
        reason: String,
    },

    #[error("cache error in {path}: {reason}")]
    Cache { path: PathBuf, reason: String },

    #[error("missing data: {0}")]
    MissingData(String),

    #[error("gradient check failed: {0}")]
    GradCheck(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code used by the command-line harness.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Parameter(_) | Error::Dimension(_) | Error::Index(_) => 2,
            Error::Format { .. }
            | Error::Cache { .. }
            | Error::MissingData(_)
            | Error::Io { .. } => 3,
            Error::Numeric(_) | Error::State(_) => 4,
            Error::GradCheck(_) => 5,
        }
    }
}
