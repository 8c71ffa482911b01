use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, FlexError>;

#[derive(Debug, Error)]
pub enum FlexError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not symmetric (relative asymmetry {0:.3e})")]
    NotSymmetric(f64),

    #[error("matrix is not positive definite (pivot {pivot:.3e} at row {row})")]
    NotPositiveDefinite { row: usize, pivot: f64 },

    #[error("operator pencil is indefinite: smallest eigenvalue {0:.3e}")]
    Indefinite(f64),

    #[error("preconditioner not SPD on this step (k = {step}, (s, r) = {inner:.3e})")]
    PreconditionerNotSpd { step: usize, inner: f64 },

    #[error("non-finite value encountered at step {0}")]
    NonFinite(usize),

    #[error("breakdown at step {step}: {what}")]
    Breakdown { step: usize, what: &'static str },

    #[error("dimension exhausted: iteration {step} needs a direction outside a space of dimension {dim}")]
    DimensionExhausted { step: usize, dim: usize },

    #[error("could not draw a non-degenerate random direction after {0} attempts")]
    DegenerateDirection(usize),

    #[error("inner iteration cap of {0} exceeded")]
    InnerIterationCap(usize),

    #[error("missing context: {0}")]
    MissingContext(&'static str),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl FlexError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        FlexError::InvalidInput(msg.into())
    }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(FlexError::DimensionMismatch { expected, found });
    }
    Ok(())
}
