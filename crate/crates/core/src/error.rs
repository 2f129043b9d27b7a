use thiserror::Error;

/// Errors raised by the numerical layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum TpaError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("Fock cutoff n_max = {n_max} leaves truncated population {tail:.3e} above tolerance {tol:.1e}")]
    Truncation { n_max: usize, tail: f64, tol: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error(
        "quadrature grid too narrow: {missing:.3e} of the probability mass lies outside the grid"
    )]
    GridTooNarrow { missing: f64 },

    #[error("numerical contract violated: {0}")]
    Numerical(String),
}

pub type Result<T> = std::result::Result<T, TpaError>;

impl TpaError {
    pub(crate) fn param(msg: impl Into<String>) -> Self {
        TpaError::InvalidParameter(msg.into())
    }
}
