use thiserror::Error;

/// Errors raised by the toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the domain where the quantity is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration or data file failed validation.
    #[error("invalid input: {0}")]
    Invalid(String),

    /// Two spectra or trajectories that must agree do not.
    #[error("mismatch: {0}")]
    Mismatch(String),

    /// An iterative solver or fit did not converge.
    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("virtual qubit is population-inverted (denominator {denominator:e} s^-1 K^-1): no cooling towards a positive temperature")]
    InvertedVirtualQubit { denominator: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::Invalid(msg.into())
}
