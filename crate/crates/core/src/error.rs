use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("empty grid")]
    EmptyGrid,

    #[error("grid has no knot matching {0}")]
    MissingKnot(f64),

    #[error("feasible set is empty: {0}")]
    Infeasible(String),

    #[error("solver did not converge: {context} (best bracket [{lower}, {upper}])")]
    SolverFailure {
        context: String,
        lower: f64,
        upper: f64,
    },

    #[error("fixed-point precondition violated: {0}")]
    FixedPointPrecondition(String),

    #[error("fixed-point iteration hit the {max_iter}-step guard (residual {residual:.3e})")]
    FixedPointMaxIter { max_iter: usize, residual: f64 },

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
