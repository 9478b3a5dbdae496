use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("{0}: no interactions")]
    EmptyCorpus(PathBuf),

    #[error("missing feature row for item(s): {}", .0.join(", "))]
    MissingFeature(Vec<String>),

    #[error("feature dimension mismatch for item {item}: expected {expected}, got {got}")]
    DimensionMismatch {
        item: String,
        expected: usize,
        got: usize,
    },

    #[error("invalid input: {0}")]
    Input(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("user {0} has no eligible negative items")]
    NoNegative(usize),

    #[error("index {index} out of range (len {len})")]
    OutOfBounds { index: usize, len: usize },

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("scenario {0} has no evaluable users")]
    EmptyScenario(String),

    #[error("non-finite loss at epoch {epoch}, step {step}")]
    NonFinite { epoch: usize, step: usize },

    #[error("artifact mismatch: {0}")]
    ArtifactMismatch(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    /// Process exit code for the CLI: 2 config, 3 numeric, 4 artifact mismatch, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) => 2,
            Error::NonFinite { .. } => 3,
            Error::ArtifactMismatch(_) => 4,
            _ => 1,
        }
    }
}
