use std::path::PathBuf;

use thiserror::Error;

use crate::corpus::Domain;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
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

    #[error("duplicate concept id `{0}`")]
    DuplicateId(String),

    #[error("unknown concept ids: {}", .0.join(", "))]
    MissingIds(Vec<String>),

    #[error("no prediction for pairs: {}", .0.join(" "))]
    MissingPredictions(Vec<String>),

    #[error("unknown domain `{0}`")]
    UnknownDomain(String),

    #[error("no pairs loaded for domain {0}")]
    MissingDomain(Domain),

    #[error("class {label} has {count} members, fewer than the {k} folds requested")]
    TooFewMembers { label: u8, count: usize, k: usize },

    #[error("training labels contain a single class")]
    SingleClass,

    #[error("empty matrix")]
    EmptyMatrix,

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("length mismatch: {0} predictions vs {1} gold labels")]
    LengthMismatch(usize, usize),

    #[error("pageviews for `{0}` are not cached and network access is disabled")]
    OfflineMiss(String),

    #[error("http request for `{target}` failed: {message}")]
    Http { target: String, message: String },

    #[error("missing resource: {0}")]
    MissingResource(String),

    #[error("invalid model file: {0}")]
    Model(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

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

    pub(crate) fn parse(path: impl Into<PathBuf>, line: usize, message: impl Into<String>) -> Self {
        Error::Parse {
            path: path.into(),
            line,
            message: message.into(),
        }
    }
}
