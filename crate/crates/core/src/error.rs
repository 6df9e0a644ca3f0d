use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SomError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: map has dimension {expected}, sample has {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("metric undefined: {0}")]
    UndefinedMetric(&'static str),

    #[error("unsupported sample-space dimension {0}; only 2D maps can be checked for edge crossings")]
    UnsupportedDimension(usize),

    #[error("invalid baseline {0}; must be positive")]
    InvalidBaseline(f64),

    #[error(transparent)]
    Dataset(#[from] DatasetError),
}

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("sample stream exhausted")]
    EndOfStream,

    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Som(#[from] SomError),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),

    #[error("JSON error: {0}")]
    Json(#[from] serde_json::Error),
}

impl From<DatasetError> for HarnessError {
    fn from(e: DatasetError) -> Self {
        HarnessError::Som(SomError::Dataset(e))
    }
}
