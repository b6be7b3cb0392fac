//! Error type shared across the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// All failure modes of dataset handling, clustering and I/O.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("element {index} has {found} components, expected {expected}")]
    RaggedDimensions {
        index: usize,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value at element {index}, component {component}")]
    NonFiniteValue { index: usize, component: usize },

    #[error("requested {k} clusters but the dataset has only {n} elements")]
    KTooLarge { k: usize, n: usize },

    #[error("at least one cluster is required")]
    ZeroClusters,

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("{given} initial centers given but params request k = {k}")]
    CenterCountMismatch { k: usize, given: usize },

    #[error("RBF kernel gamma must be positive, got {0}")]
    NonPositiveGamma(f64),

    #[error("dataset of {n} elements exceeds the Gram matrix cap of {cap}")]
    GramTooLarge { n: usize, cap: usize },

    #[error("cluster index {index} out of range for k = {k}")]
    BadClusterIndex { index: usize, k: usize },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("parse error at line {line}, column {column}")]
    ParseError { line: usize, column: usize },

    #[error("unsupported image format: {0}")]
    UnsupportedFormat(String),

    #[error("corrupt PGM data: {0}")]
    CorruptHeader(String),

    #[error("label map carries no image shape")]
    NoImageShape,

    #[error("JSON error on {path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },
}

impl Error {
    /// Wraps an I/O error with the path it occurred on.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
