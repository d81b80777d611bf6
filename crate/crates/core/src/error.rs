use thiserror::Error;

use crate::dynamics::AssumptionReport;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for a network of {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },

    #[error("line {line}: edge weight {weight} must be positive and finite")]
    InvalidWeight { line: usize, weight: f64 },

    #[error("line {line}: duplicate edge ({i}, {j})")]
    DuplicateEdge { line: usize, i: usize, j: usize },

    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("entry ({row}, {col}) = {value} is negative or not finite")]
    InvalidEntry { row: usize, col: usize, value: f64 },

    #[error("well-posedness assumptions violated:\n{0}")]
    Assumption(AssumptionReport),

    #[error("state invariant violated at step {k}, node {node}: {detail}")]
    Invariant {
        k: usize,
        node: usize,
        detail: String,
    },

    #[error("expected a {expected} trajectory, found {found}")]
    WrongModel {
        expected: &'static str,
        found: &'static str,
    },

    #[error("trajectory has {len} states, at least {required} required")]
    TrajectoryTooShort { len: usize, required: usize },

    #[error("step {k} is outside the trajectory horizon ({len} states)")]
    StepOutOfRange { k: usize, len: usize },

    #[error("power iteration did not converge after {iterations} iterations (relative gap {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("regression system is empty")]
    EmptySystem,

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
