//! Crate-wide error type.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Mat(#[from] matio::MatError),

    #[error("dataset has no labeled samples")]
    EmptyDataset,

    #[error("class {0} is not present in the dataset")]
    MissingClass(u32),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("train fraction {0} must lie strictly between 0 and 1")]
    InvalidFraction(f64),

    #[error("penalty C = {c} is infeasible for N = {n} samples; the sum constraint needs C >= {}", 1.0 / *n as f64)]
    InfeasiblePenalty { c: f64, n: usize },

    #[error("Gram matrix diagonal contains non-finite entries")]
    DegenerateKernel,

    #[error("projection matrix is numerically rank deficient")]
    RankDeficient,

    #[error("projection matrix became non-finite during the gradient update (learning rate too large?)")]
    NonFiniteProjection,

    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),

    #[error("subspace dimension d = {d} exceeds the kernel-space rank r = {rank}")]
    SubspaceDimExceedsRank { d: usize, rank: usize },

    #[error("centered kernel matrix has no positive spectrum (identical samples or badly scaled sigma)")]
    NoPositiveSpectrum,

    #[error("target class has {have} training samples, fewer than the {need} required")]
    TooFewTargetSamples { have: usize, need: usize },

    #[error("a rate is undefined: positive or negative count is zero")]
    UndefinedRate,

    #[error("scene is inconsistent: {0}")]
    BadScene(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
