use thiserror::Error;

/// Errors raised while building models or running the solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid time grid: horizon {horizon} is not a multiple of dt {dt}")]
    InvalidGrid { horizon: f64, dt: f64 },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: String, actual: String },

    #[error("invalid policy at interval {interval}, state {state}: {reason}")]
    InvalidPolicy {
        interval: usize,
        state: usize,
        reason: String,
    },

    /// A forward step produced a probability below the cleanup threshold.
    /// Usually means dt is too coarse for the rates involved.
    #[error("simplex violation at node {node}, state {state}: value {value:e}")]
    SimplexViolation { node: usize, state: usize, value: f64 },

    #[error("non-finite value in {context} at node {node}")]
    NumericOverflow { context: &'static str, node: usize },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn dims(shape: &[usize]) -> String {
    let parts: Vec<String> = shape.iter().map(|d| d.to_string()).collect();
    format!("[{}]", parts.join(" x "))
}
