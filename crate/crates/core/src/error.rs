use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("graph is not connected ({reached} of {total} nodes reachable)")]
    Disconnected { reached: usize, total: usize },

    #[error("no connected sample after {attempts} attempts")]
    GenerationFailed { attempts: usize },

    #[error("graphml parse error at <{element}>: {message}")]
    GraphMl { element: String, message: String },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("infeasible cache budget: {0}")]
    InfeasibleBudget(String),

    #[error("zero caching probability for content {index} with positive popularity")]
    ZeroPlacementMass { index: usize },

    #[error("internal invariant violated: {0}")]
    Invariant(String),

    #[error("plan error: {0}")]
    Plan(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
