use thiserror::Error;

/// Errors raised by the algebra kernels.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,

    #[error("coefficient of {variable}^{exponent} requested outside the guaranteed window {window}")]
    WindowViolation {
        variable: String,
        exponent: String,
        window: String,
    },

    #[error("vector is not homogeneous (weights {0:?})")]
    NonHomogeneous(Vec<u32>),

    #[error("mode index {index} is not in (1/{k})Z")]
    InvalidMode { index: String, k: u32 },

    #[error("incompatible series: {0}")]
    Incompatible(String),

    #[error("parse error at position {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error("{0}")]
    Usage(String),

    #[error("desk-scale bound exceeded: {0}")]
    CapExceeded(String),
}

pub type Result<T> = std::result::Result<T, Error>;
