use thiserror::Error;

/// Errors raised by the fitting, testing and simulation routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// An inverse transform was requested at or beyond the image of the map.
    #[error("value {value} outside the open range ({lower}, {upper})")]
    OutOfRange { value: f64, lower: f64, upper: f64 },

    #[error("estimation failed: {0}")]
    EstimationFailure(String),

    #[error("bootstrap degenerate: {0}")]
    BootstrapDegeneracy(String),

    #[error("study aborted after {failures} failed replications out of {attempted}")]
    StudyAborted { failures: usize, attempted: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidInput(msg.into())
}
