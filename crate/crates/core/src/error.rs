use thiserror::Error;

/// Errors raised by the numerical and sampling routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The eigensolver did not converge within its sweep budget.
    #[error("eigensolver failed to converge after {iterations} iterations (size {size})")]
    NoConvergence { size: usize, iterations: usize },

    /// A continued-fraction denominator fell below the representable threshold.
    #[error("continued fraction ill-conditioned at level {level}: |denominator| = {magnitude:e}")]
    IllConditioned { level: usize, magnitude: f64 },

    /// The Hankel recursion broke down before reaching the requested depth.
    #[error("moment sequence supports only {achieved} recurrence levels (requested {requested})")]
    HankelSingular { achieved: usize, requested: usize },

    /// Quadrature could not reach the requested accuracy.
    #[error("quadrature error estimate {estimate:e} exceeds tolerance {tolerance:e}")]
    Accuracy { estimate: f64, tolerance: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidInput(msg.into()))
}
