use thiserror::Error;

use crate::trainer::TrainTrace;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("point lies outside the polytope (hull residual {residual:.3e})")]
    OutsideHull { residual: f64 },

    /// Iterative solver stopped before certifying optimality.
    #[error("solver failed: {message} (gap {gap:.3e})")]
    Solver {
        message: String,
        best: Vec<f64>,
        gap: f64,
    },

    /// Comparison reports disagree on a pair; use the relation-table path.
    #[error("contradictory comparison reports on pair ({a}, {b})")]
    Inconsistent { a: usize, b: usize },

    #[error("training diverged at step {step}")]
    Diverged { step: usize, trace: Box<TrainTrace> },

    #[error("internal error: {0}")]
    Internal(String),
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidInput(msg.into())
    }
}
