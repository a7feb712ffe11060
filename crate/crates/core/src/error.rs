use thiserror::Error;

/// Errors shared by the solver and verifier modules.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// The weighted dual norm is undefined when a coordinate carries no
    /// accumulated mass but the argument is nonzero there.
    #[error("undefined dual norm: coordinate {coord} has zero mass but nonzero component")]
    UndefinedDualNorm { coord: usize },

    #[error("non-finite value in loss stream at round {round}")]
    NonFinite { round: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
