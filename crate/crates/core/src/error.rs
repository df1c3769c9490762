use thiserror::Error;

/// Errors raised by the simulation and analysis kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Malformed arguments: bad site indices, mismatched dimensions, empty inputs.
    #[error("invalid input: {0}")]
    Input(String),

    /// Arguments outside the domain on which a formula is defined.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds a resource guard.
    #[error("resource limit: {what} needs {required}, limit is {limit}")]
    Resource {
        what: String,
        required: u128,
        limit: u128,
    },

    /// A numerical invariant was violated beyond round-off.
    #[error("numerical validity: {0}")]
    Numerical(String),

    /// Too few samples to estimate the requested statistic.
    #[error("insufficient samples: need at least {required}, have {available}")]
    StatisticalPower { required: usize, available: usize },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn input(msg: impl Into<String>) -> Error {
    Error::Input(msg.into())
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
