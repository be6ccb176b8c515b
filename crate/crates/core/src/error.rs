use std::path::PathBuf;

use crate::types::AlgorithmId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid series: {0}")]
    InvalidSeries(String),

    #[error("index {index} out of range for series of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: &'static str, reason: String },

    #[error("{algorithm} requires parameter `{field}`")]
    MissingParam {
        algorithm: AlgorithmId,
        field: &'static str,
    },

    #[error("series too short for peak detection: {len} samples (need at least 3)")]
    SeriesTooShort { len: usize },

    #[error("degenerate normalization context: min == max == {0}")]
    DegenerateNormalization(f64),

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("length mismatch: {what} ({left} vs {right})")]
    LengthMismatch {
        what: &'static str,
        left: usize,
        right: usize,
    },

    #[error("invalid recording `{id}`: {reason}")]
    InvalidRecording { id: String, reason: String },

    #[error("invalid ground truth: {0}")]
    InvalidGroundTruth(String),

    #[error("zero variance in {0}")]
    ZeroVariance(&'static str),

    #[error("infeasible parameter grid for {0}: no point satisfies the constraints")]
    InfeasibleGrid(AlgorithmId),

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Session(String),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParam {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            message: message.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
