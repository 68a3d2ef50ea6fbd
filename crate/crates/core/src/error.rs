use thiserror::Error;

/// Errors produced by the tomography toolkit.
#[derive(Debug, Error)]
pub enum TomoError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("numerical error: {0}")]
    Numerical(String),

    #[error("measurement setting {0} not present in dataset")]
    NotFound(String),

    /// The data-fit ball is so large that the zero matrix (or something
    /// arbitrarily close to it) is feasible.
    #[error("degenerate solution: optimal trace {trace:e} is below 1e-6")]
    DegenerateSolution { trace: f64 },

    #[error(
        "feasibility undetermined after {iterations} iterations \
         (best residual {residual:e}, epsilon {epsilon:e})"
    )]
    FeasibilityUndetermined {
        iterations: usize,
        residual: f64,
        epsilon: f64,
    },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("no measurement setting covers labels: {}", .0.join(", "))]
    MissingSettings(Vec<String>),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = TomoError> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> TomoError {
    TomoError::InvalidArgument(msg.into())
}
