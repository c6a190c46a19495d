use std::path::PathBuf;

use thiserror::Error;

/// Everything that can go wrong between ingesting a series and writing a report.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("segment for label {label:?} has {len} samples, need at least 2")]
    DegenerateSegment { label: String, len: usize },

    #[error("invalid resample target {0}, need at least 2")]
    InvalidTarget(usize),

    #[error("value {value} at index {index} is outside [-1, 1]; rescale before polar encoding")]
    Domain { index: usize, value: f64 },

    #[error("invalid binning: {0}")]
    InvalidBinning(String),

    #[error("shape error: {0}")]
    Shape(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("cannot stratify: class {label:?} has {count} samples but k = {k}")]
    Stratification { label: String, count: usize, k: usize },

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("format error: {0}")]
    Format(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
