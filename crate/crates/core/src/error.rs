use thiserror::Error;

/// Errors produced by construction, solvers and analysis routines.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not symmetric: max |M - M^T| entry is {0:.3e}")]
    NotSymmetric(f64),

    #[error("matrix is not positive semidefinite: smallest eigenvalue {0:.3e}")]
    NotPositiveSemidefinite(f64),

    #[error("dimension mismatch: matrix is {matrix}x{matrix}, vector has length {vector}")]
    DimensionMismatch { matrix: usize, vector: usize },

    #[error("unknown problem name '{name}'; valid names: {valid}")]
    UnknownProblem { name: String, valid: String },

    #[error("invalid parameter for problem '{problem}': {message}")]
    InvalidParameter { problem: String, message: String },

    #[error(
        "prox inner solver exhausted {budget} iterations at iterate {index}: \
         best residual {best_residual:.3e} exceeds tolerance {tol:.3e}"
    )]
    ProxBudgetExceeded {
        budget: usize,
        index: usize,
        best_residual: f64,
        tol: f64,
    },

    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),

    #[error("feedback step size undefined: {0}")]
    FeedbackUndefined(String),

    #[error("insufficient data for rate fit: {usable} usable points, need at least {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("integration step size underflow at t = {t:.6e} (h = {h:.3e})")]
    StepUnderflow { t: f64, h: f64 },

    #[error("integration exceeded {0} steps before reaching the end time")]
    MaxStepsExceeded(usize),

    #[error("index {index} out of range for history of length {len}")]
    IndexOutOfRange { index: usize, len: usize },

    #[error("time {t:.6e} outside trajectory span [{start:.6e}, {end:.6e}]")]
    OutOfSpan { t: f64, start: f64, end: f64 },
}
