use thiserror::Error;

/// Errors raised by the simulation and estimation layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("state set is ill-conditioned (condition number {condition:.3e})")]
    IllConditionedStateSet { condition: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate decay: {0}")]
    FitDegenerate(String),

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::InvalidArgument(msg.into()))
}
