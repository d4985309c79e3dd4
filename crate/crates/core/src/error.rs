use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: line {line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error("duplicate item id `{0}`")]
    DuplicateId(String),

    #[error("unknown category `{0}`")]
    UnknownCategory(String),

    #[error("no item has text to embed")]
    EmptyCorpus,

    #[error("item `{0}` missing from embedding file")]
    MissingItem(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("invalid embedding: {0}")]
    InvalidEmbedding(String),

    #[error("cover infeasible: {0} row(s) cannot be covered by the candidate columns")]
    Infeasible(usize),

    #[error("catalog has {0} uncoverable label(s) and strict mode is on")]
    InfeasibleCatalog(usize),

    #[error("invalid cluster count k={k} for {n} item(s)")]
    InvalidK { k: usize, n: usize },

    #[error("quantile must lie in (0, 1], got {0}")]
    InvalidQuantile(f64),

    #[error("warm set is empty")]
    EmptyWarmSet,

    #[error("invalid selection size {size} for {n} item(s)")]
    InvalidSize { size: usize, n: usize },

    #[error("unknown item `{0}`")]
    UnknownItem(String),

    #[error("invalid configuration: {0}")]
    Config(String),

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

    pub(crate) fn parse(path: impl std::fmt::Display, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.to_string(),
            line,
            message: message.into(),
        }
    }
}
