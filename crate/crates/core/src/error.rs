use thiserror::Error;

/// Errors raised anywhere in the solver stack.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("empty selection: {0}")]
    EmptySelection(String),

    #[error("rank-deficient matrix: {0}")]
    RankDeficient(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("singular local system in sweep {sweep}, core {core}")]
    SingularLocalSystem { sweep: usize, core: usize },

    #[error("ill-conditioned eigenbasis: {0}")]
    IllConditioned(String),

    #[error("memory cap exceeded: {what} needs {needed} bytes, cap is {cap} bytes")]
    MemoryCap { what: String, needed: u64, cap: u64 },

    #[error("oracle failed at (t,x,y,z) = {coords:?}: {reason}")]
    Oracle { coords: [f64; 4], reason: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
