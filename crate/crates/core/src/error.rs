use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension must be between 1 and {max}, got {got}")]
    InvalidDimension { got: usize, max: usize },

    #[error("direction label {label} out of range for d={d} (valid: 0..{})", 2 * d)]
    LabelOutOfRange { label: u64, d: usize },

    #[error("point has {got} coordinates, expected {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point {point:?} lies outside the box of radius {radius}")]
    OutsideBox { point: Vec<i64>, radius: u64 },

    #[error("coordinate overflow stepping from {point:?}")]
    CoordinateOverflow { point: Vec<i64> },

    #[error("step cap of {cap} exhausted")]
    CapExhausted { cap: u64 },

    #[error("invalid rotor order: {0}")]
    InvalidOrder(String),

    #[error("invalid rule: {0}")]
    InvalidRule(String),

    #[error("invalid configuration: {field}: {message}")]
    InvalidConfig { field: String, message: String },

    #[error("departure instrumentation is disabled for this walk")]
    InstrumentationDisabled,

    #[error("checkpoint version {found} is not supported (expected {expected})")]
    CheckpointVersion { found: u64, expected: u64 },

    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },

    #[error("checkpoint has d={found}, experiment expects d={expected}")]
    CheckpointDimension { expected: usize, found: usize },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
