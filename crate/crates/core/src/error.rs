use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, CalibrationError>;

#[derive(Debug, Error)]
pub enum CalibrationError {
    #[error("dataset is empty")]
    EmptyDataset,

    #[error("probabilities and labels differ in length ({probs} vs {labels})")]
    LengthMismatch { probs: usize, labels: usize },

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{path}: line {line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("probability {0} is outside [0, 1]")]
    ProbabilityOutOfRange(f64),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("both classes must be present to fit {0}")]
    SingleClass(&'static str),

    #[error("split leaves the {0} side empty")]
    EmptySplit(&'static str),

    #[error("model format error: {0}")]
    Format(String),
}

impl CalibrationError {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CalibrationError::Io {
            path: path.into(),
            source,
        }
    }
}
