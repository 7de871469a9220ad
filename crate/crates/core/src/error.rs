use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Malformed or inconsistent input data.
    #[error("data error: {0}")]
    Data(String),

    /// An argument lies outside the domain an operation is defined on.
    #[error("domain error: {0}")]
    Domain(String),

    /// A caller broke an operation's precondition (mismatched lengths, bad index, ...).
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("smoothing failed at site `{site}`: {reason}")]
    Smoothing { site: String, reason: String },

    #[error("variogram error: {0}")]
    Variogram(String),

    #[error("variogram fit failed: {0}")]
    Fit(String),

    #[error("linear solve failed: {0}")]
    Solve(String),

    #[error("cross-validation failed at fold {fold}: {source}")]
    Cv {
        fold: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("simulation error: {0}")]
    Sim(String),

    #[error("replicate {replicate}: {source}")]
    Replicate {
        replicate: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
