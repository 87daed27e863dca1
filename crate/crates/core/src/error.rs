use thiserror::Error;

/// Errors produced by the operator catalog, the driver and the front ends.
#[derive(Debug, Error)]
pub enum HpeError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported operator: {0}")]
    UnsupportedOperator(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("infeasible parameters: {0}")]
    Infeasible(String),

    #[error("step inequality violated at k = {k}: slack {slack:e} (rhs {rhs:e})")]
    StepViolation { k: usize, slack: f64, rhs: f64 },

    #[error("non-finite iterate at k = {k}")]
    NonFinite { k: usize },

    #[error("identity check failed at k = {k}: {what} off by {gap:e}")]
    IdentityViolation { k: usize, what: &'static str, gap: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = HpeError> = std::result::Result<T, E>;

pub(crate) fn usage(msg: impl Into<String>) -> HpeError {
    HpeError::InvalidArgument(msg.into())
}
