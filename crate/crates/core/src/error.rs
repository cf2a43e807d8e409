use thiserror::Error;

/// Errors raised anywhere in the workbench.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is empty")]
    EmptyMatrix,

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian: |M - M^dagger| = {defect:e}")]
    NotHermitian { defect: f64 },

    #[error("matrix is not unitary: |U^dagger U - 1| = {defect:e}")]
    NotUnitary { defect: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("quadrature did not reach tolerance {tol:e}: estimate {estimate} with error {error:e}")]
    QuadratureNotConverged { estimate: f64, error: f64, tol: f64 },

    #[error("root finding failed: best residual {best_residual:e} after {starts} start(s)")]
    NoRoot { best_residual: f64, best_point: Vec<f64>, starts: usize },

    #[error("propagation did not converge: last refinement changed the propagator by {distance:e} (tol {tol:e}) at {steps} steps")]
    PropagationNotConverged { distance: f64, tol: f64, steps: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("schedule rejected: {0}")]
    InvalidSchedule(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
