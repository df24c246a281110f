use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("truncation mismatch: expected L={expected}, got L={got}")]
    TruncationMismatch { expected: usize, got: usize },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("non-dissipative mode set: {0}")]
    NonDissipative(String),

    #[error("step {step} is not aligned to the noise grid (dt_noise = {dt_noise})")]
    Misaligned { step: f64, dt_noise: f64 },

    #[error("numerical blowup at t = {t}: |v| went from {before:.3e} to {after:.3e}")]
    Blowup { t: f64, before: f64, after: f64 },

    #[error("malformed spectrum record: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
