use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("I/O error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },

    #[error("malformed CSV at row {row}: {message}")]
    Csv { row: usize, message: String },

    #[error("ragged row {row}: expected {expected} fields, found {found}")]
    RaggedRow {
        row: usize,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {column}: {value:?} is not a finite number")]
    InvalidField {
        row: usize,
        column: usize,
        value: String,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("cluster {cluster} has vanishing total weight (degenerate initialization)")]
    EmptyCluster { cluster: usize },

    #[error("cluster {cluster} has zero scatter, cannot estimate its bandwidth")]
    DegenerateCluster { cluster: usize },

    #[error("covariance matrix is not positive definite")]
    SingularCovariance,

    #[error("mahalanobis distance requested without a covariance model")]
    MissingCovariance,

    #[error("centroids {first} and {second} coincide")]
    CoincidentCentroids { first: usize, second: usize },

    #[error("at least two non-empty clusters are required, found {found}")]
    TooFewClusters { found: usize },

    #[error("scenario error: {0}")]
    Scenario(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
