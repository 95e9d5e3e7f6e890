use std::path::PathBuf;

use crate::graph::{Category, ItemId};

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("edge references unknown item `{0}`")]
    UnknownItem(ItemId),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    Dimension { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("no positive candidate pairs: {0}")]
    NoPositiveCandidates(String),

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("non-finite value: {0}")]
    Numeric(String),

    #[error("training diverged at epoch {epoch}: mean loss {loss}")]
    Divergence { epoch: usize, loss: f64 },

    #[error("retrieval domain error: category `{0}` is not indexed or is empty")]
    RetrievalDomain(Category),

    #[error("outfit spec error: {0}")]
    Spec(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("edge calibration failed: {0}")]
    Calibration(String),

    #[error("missing features for item `{0}`")]
    MissingFeatures(ItemId),

    #[error("json error: {0}")]
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
