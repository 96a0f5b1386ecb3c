use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    Argument(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("leading coefficient is numerically zero (log-magnitude {log_abs})")]
    DegenerateLeading { log_abs: f64 },

    #[error("a zero lies within {distance:e} of the integration circle")]
    NearCircleRoot { distance: f64 },

    #[error("measure has infinite logarithmic energy: {0}")]
    InfiniteEnergy(String),

    #[error("signed energy is positive ({0:e}); the measures are not comparable")]
    NegativeDiscriminant(f64),

    #[error("test function is nonzero on the grid boundary (max |phi| = {0:e})")]
    SupportTruncation(f64),

    #[error("zeros {i} and {j} coincide (gap {gap:e})")]
    CoincidentZeros { i: usize, j: usize, gap: f64 },

    #[error("initial configuration is infeasible: {0}")]
    InfeasibleStart(String),

    #[error("value out of range: {0}")]
    Range(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
