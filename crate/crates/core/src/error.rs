use thiserror::Error;

/// Errors raised by the number-theoretic and Monte Carlo routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Requested sizes exceed the supported sieve or memory budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// A caller broke a documented precondition.
    #[error("contract violation: {0}")]
    Contract(String),

    /// An Euler factor vanished, so its logarithm is undefined.
    #[error("singular Euler factor at p = {p}")]
    Singularity { p: u64 },

    /// Overflow, underflow or NaN in an intermediate quantity.
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// The quadrature window leaves a tail larger than the tolerance.
    #[error("integration window too small: tail bound {bound:e} exceeds tolerance {tol:e}")]
    Window { bound: f64, tol: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn contract<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Contract(msg.into()))
}

pub(crate) fn capacity<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Capacity(msg.into()))
}
