use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid agent type: {0}")]
    InvalidType(String),

    #[error("invalid economy: {0}")]
    InvalidEconomy(String),

    #[error("penalty must be non-negative, got {0}")]
    NegativePenalty(f64),

    #[error("argument {x} is outside the domain of the lower Lambert W branch [-1/e, 0)")]
    LambertDomain { x: f64 },

    #[error("quadrature did not converge: achieved error {achieved:e}, requested {requested:e}")]
    Quadrature { achieved: f64, requested: f64 },

    #[error("no sign change of the sup-utility curve on [0, {bound}]")]
    NoSignChange { bound: f64 },

    #[error("inconsistent outcome: {0}")]
    InconsistentOutcome(String),

    #[error("invalid config field `{field}`: {message}")]
    Config { field: String, message: String },

    #[error("{0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
