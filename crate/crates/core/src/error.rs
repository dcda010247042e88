use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("non-finite sample {value} at interior node {node}, t = {t}")]
    NonFinite { node: usize, t: f64, value: f64 },

    #[error(
        "linear solve did not converge at step {step}: relative residual {residual:e} after {iterations} iterations"
    )]
    LinearSolve {
        step: usize,
        residual: f64,
        iterations: usize,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
