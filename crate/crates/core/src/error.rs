use thiserror::Error;

/// Errors produced by the splitting library and the experiment runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("spectra live on different frequency grids")]
    GridMismatch,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("pulse wave velocity {u} m/s is below the admissible floor {min} m/s")]
    PwvOutOfDomain { u: f64, min: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("metric undefined: {0}")]
    UndefinedMetric(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("time column is not strictly increasing at data row {row}")]
    NonMonotoneTime { row: usize },

    #[error("waveform file has {found} channels but {expected} distances were given")]
    ChannelMismatch { expected: usize, found: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
