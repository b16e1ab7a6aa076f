use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("invalid material: {0}")]
    InvalidMaterial(String),
    #[error("invalid measurement: {0}")]
    InvalidMeasurement(String),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("singular matrix: zero pivot at step {step} (|pivot| = {pivot:e})")]
    Singular { step: usize, pivot: f64 },
    #[error("solve inaccurate: residual {residual:e} exceeds tolerance {tolerance:e}")]
    Inaccurate { residual: f64, tolerance: f64 },
    #[error("assumption violated: {0}")]
    Assumption(String),
    #[error("problem too large for dense {what}: {size} dofs (limit {limit})")]
    TooLarge { what: &'static str, size: usize, limit: usize },
    #[error("unsupported configuration: {0}")]
    Unsupported(String),
    #[error("eigen-solver did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Numerical failure of a solve, as opposed to bad input or a refused assumption.
    pub fn is_solver_failure(&self) -> bool {
        matches!(self, Error::Singular { .. } | Error::Inaccurate { .. } | Error::NoConvergence { .. })
    }

    pub fn is_assumption_failure(&self) -> bool {
        matches!(self, Error::Assumption(_))
    }
}

pub type Result<T> = std::result::Result<T, Error>;
