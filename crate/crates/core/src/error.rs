use thiserror::Error;

/// Errors raised by the estimators, oracles and problem solvers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("value {value} lies outside the link range {range}")]
    Range { value: f64, range: String },

    #[error("shape mismatch: expected {expected}, got {actual}")]
    Shape { expected: usize, actual: usize },

    #[error("{count} target values fall outside the link range {range} (first indices: {first:?})")]
    RangeViolation {
        count: usize,
        first: Vec<usize>,
        range: String,
    },

    #[error("cost became non-finite at iteration {iteration}")]
    NonFiniteCost { iteration: usize },

    #[error("fixed-point iterate became non-finite at iteration {iteration}")]
    NonFiniteIterate { iteration: usize },

    #[error("dataset `{0}` is empty")]
    EmptyDataset(&'static str),

    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },

    #[error("stationary initialization requires |r| < 1, got r = {0}")]
    NonStationary(f64),

    #[error("action index {index} out of range for {actions} actions")]
    BadActionIndex { index: usize, actions: usize },

    #[error("no transitions for action labels {0:?}")]
    MissingActionData(Vec<usize>),

    #[error("tail mass {mass:e} exceeds tolerance {tolerance:e}")]
    TailMass { mass: f64, tolerance: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
