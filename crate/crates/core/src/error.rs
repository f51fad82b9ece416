use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("quadrature did not reach tolerance {target:e} (estimate {estimate:e}) within {panels} panels")]
    ToleranceNotMet {
        target: f64,
        estimate: f64,
        panels: usize,
    },

    #[error("sampled function does not cover [{lo}, {hi}] and has no extension on that side")]
    InsufficientSupport { lo: f64, hi: f64 },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no sign change of {what} on [{lo}, {hi}]")]
    NoBracket { what: &'static str, lo: f64, hi: f64 },

    #[error("errors not strictly decreasing along n: {errors:?}")]
    NonMonotone { errors: Vec<f64> },

    #[error("invalid potential: {0}")]
    InvalidPotential(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("checkpoint format: {0}")]
    Format(String),

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
