use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported group family: {0}")]
    UnsupportedFamily(String),

    #[error("invalid generating set: {0}")]
    InvalidGenerators(String),

    #[error("quotient at level {level} has {vertices} vertices, above the cap of {cap}")]
    QuotientTooLarge {
        level: u32,
        vertices: u128,
        cap: usize,
    },

    #[error("covering check failed between levels {upper} and {lower}: {reason}")]
    CoveringMismatch { upper: u32, lower: u32, reason: String },

    #[error("window of {sites} sites exceeds the enumeration cap of {cap}")]
    BallTooLarge { sites: usize, cap: usize },

    #[error("state space over {sites} sites exceeds the cap of {cap} sites")]
    StateSpaceTooLarge { sites: usize, cap: usize },

    #[error("invalid jump rate: {0}")]
    InvalidJumpRate(String),

    #[error("invalid time scale: {0}")]
    InvalidTimeScale(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("operator is not symmetric (max asymmetry {0:e})")]
    NotSymmetric(f64),

    #[error("no convergence: {0}")]
    NoConvergence(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
