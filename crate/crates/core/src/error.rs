use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("dimension mismatch: {left:?} vs {right:?}")]
    DimensionMismatch {
        left: (usize, usize),
        right: (usize, usize),
    },

    #[error("truncation overflow: tail bound {tail:.3e} exceeds threshold {threshold:.3e}")]
    TruncationOverflow { tail: f64, threshold: f64 },

    #[error("oracle is limited to {limit}x{limit} states, got {dims:?}")]
    OracleTooLarge { dims: (usize, usize), limit: usize },

    #[error("g must be ≥ 1, got {0}")]
    InvalidGain(f64),

    #[error("state has zero norm")]
    ZeroNorm,

    #[error("divergent Gaussian term: |m m'| = {0} ≥ 1")]
    DivergentTerm(f64),

    #[error("Q-function imaginary residue {0:.3e} exceeds tolerance")]
    ImaginaryResidue(f64),

    #[error("operation requires post-selection mode {expected}")]
    ModeMismatch { expected: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
