use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{op}: shape mismatch between {}x{} and {}x{}", left.0, left.1, right.0, right.1)]
    ShapeMismatch {
        op: &'static str,
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid activation: {0}")]
    InvalidActivation(String),

    #[error("invalid network spec: {0}")]
    InvalidSpec(String),

    #[error(
        "softmax has no elementwise subgradient; use the fused softmax/cross-entropy gradient"
    )]
    SoftmaxSubgradient,

    #[error("non-finite values in {0}")]
    NonFinite(&'static str),

    #[error("invalid optimizer: {0}")]
    InvalidOptimizer(String),

    #[error("optimizer state does not match {0}")]
    OptimizerStateMismatch(&'static str),

    #[error("invalid training config: {0}")]
    InvalidConfig(String),

    #[error("dataset is empty")]
    EmptyData,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("{}: bad magic number {found:#010x}, expected {expected:#010x}", path.display())]
    BadMagic {
        path: PathBuf,
        expected: u32,
        found: u32,
    },

    #[error("{}: truncated file ({needed} bytes needed, {actual} present)", path.display())]
    Truncated {
        path: PathBuf,
        needed: usize,
        actual: usize,
    },

    #[error("image count {images} does not match label count {labels}")]
    CountMismatch { images: usize, labels: usize },

    #[error("{}:{line}:{column}: {message}", path.display())]
    Delimited {
        path: PathBuf,
        line: usize,
        column: usize,
        message: String,
    },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("kappa undefined: requires eps > {min_eps}")]
    KappaUndefined { min_eps: f64 },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
