use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    #[error("invalid perturbation schedule: {0}")]
    InvalidSchedule(String),

    #[error("sampling gap of {:.3} s between t={start:.3} and t={end:.3}", end - start)]
    Gap { start: f64, end: f64 },

    #[error("length mismatch: prediction has {pred} ticks, truth has {truth}")]
    LengthMismatch { pred: usize, truth: usize },

    #[error("noise floor is zero, peak-to-noise ratio is undefined")]
    UndefinedRatio,

    #[error("empty group: {0}")]
    EmptyGroup(String),

    #[error("schema mismatch: {0}")]
    Schema(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("NaN payload in window {window}, tick {tick}")]
    NanPayload { window: usize, tick: usize },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

/// Coarse classification used by the CLI to pick an exit code.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorKind {
    Usage,
    Data,
    Io,
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Io { .. } => ErrorKind::Io,
            Error::Csv(e) if e.is_io_error() => ErrorKind::Io,
            Error::InvalidInput(_) | Error::InvalidSchedule(_) => ErrorKind::Usage,
            _ => ErrorKind::Data,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
