use thiserror::Error;

/// Errors raised by the tensor-strata operations.
#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("mode {mode} out of range for a tensor of order {order}")]
    ModeOutOfRange { mode: usize, order: usize },

    #[error("non-finite entry in input")]
    NonFinite,

    #[error("tensor is not symmetric: asymmetry {asymmetry:.3e} exceeds {allowed:.3e}")]
    NotSymmetric { asymmetry: f64, allowed: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// The input is not real-rank-two (or otherwise outside the decomposable locus).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// A numerical margin fell below the tolerance policy.
    #[error("tolerance failure: {0}")]
    Tolerance(String),

    #[error("multilinear rank mismatch: expected {expected:?}, found {found:?}")]
    MrankMismatch {
        expected: Vec<usize>,
        found: Vec<usize>,
    },

    #[error("sampler exhausted {0} redraws without a certified sample")]
    SamplerExhausted(usize),

    #[error("input is not in the stratum: {0}")]
    NotInStratum(String),

    #[error("unsupported stratum: {0}")]
    Unsupported(String),

    #[error("path verification failed after detour retries: {0}")]
    RetryExhausted(String),

    #[error("parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
