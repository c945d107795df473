use thiserror::Error;

/// Errors produced by meshing, assembly, and the solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {point:?} lies outside the domain")]
    OutOfDomain { point: Vec<f64> },

    #[error("linear solve failed: {detail} (achieved residual {residual:.3e})")]
    SolverFailure { detail: String, residual: f64 },

    #[error("Newton iteration at step {step} did not converge after {iters} iterations (residual history {history:?})")]
    NewtonFailure {
        step: usize,
        iters: usize,
        history: Vec<f64>,
    },
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidArgument(msg.into())
    }
}
