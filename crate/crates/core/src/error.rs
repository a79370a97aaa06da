use thiserror::Error;

/// Errors raised by the solver and the diagnostics.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("point outside the domain: {0}")]
    OutOfDomain(String),

    #[error("profile gauge mismatch: expected {expected}, found {found}")]
    GaugeMismatch { expected: String, found: String },

    #[error("profile is identically zero")]
    TrivialProfile,

    #[error("empty input: {0}")]
    Empty(String),

    #[error("bracket [{lo}, {hi}] does not separate shot classifications")]
    InvalidBracket { lo: f64, hi: f64 },

    #[error("bisection did not converge within {0} iterations")]
    BisectionExhausted(usize),

    #[error("shot at amplitude {0} could not be classified")]
    Unclassified(f64),

    #[error("converged solution has {found} nodes, expected {expected}")]
    NodeMismatch { expected: usize, found: usize },

    #[error("profile does not qualify: {0}")]
    NotADecayingProfile(String),

    #[error("numerical failure: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
