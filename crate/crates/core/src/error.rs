use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain of a function.
    #[error("domain error: {0}")]
    Domain(String),

    /// A statistic was requested for a sample with no usable records.
    #[error("empty sample: no usable records")]
    EmptySample,

    #[error("dimension mismatch: expected {expected} cells, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    /// A token could not be read as a decimal number.
    #[error("cannot parse {0:?} as a decimal number")]
    Parse(String),

    /// Invalid user configuration (missing column, bad flag combination).
    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}
