use thiserror::Error;

#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid shape: {0}")]
    InvalidShape(String),

    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch { expected: Vec<usize>, got: Vec<usize> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("mode {mode} out of range for order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("rank {rank} exceeds dimension {dim} in mode {mode}")]
    RankExceedsDimension { mode: usize, rank: usize, dim: usize },

    #[error("non-finite entry at flat index {0}")]
    NonFinite(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("no convergence after {iterations} iterations (best value {best}, gap {gap:e})")]
    NonConvergence { iterations: usize, best: f64, gap: f64 },

    #[error("point outside the effective domain: norm {norm} exceeds radius {alpha}")]
    OutOfDomain { norm: f64, alpha: f64 },

    #[error("coverage validation failed: achieved radius {achieved} > target {target}")]
    CoverageFailed { achieved: f64, target: f64 },

    #[error("inconsistent measurement system: least-squares residual {0:e}")]
    InconsistentSystem(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
