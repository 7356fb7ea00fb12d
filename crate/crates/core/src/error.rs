use thiserror::Error;

use crate::exprlang::ParseError;

/// Evaluation fault raised by a field function at a specific point.
#[derive(Debug, Clone, PartialEq, Error)]
#[error("evaluation fault at {point:?}: {message}")]
pub struct EvalFault {
    pub point: Vec<f64>,
    pub message: String,
}

impl EvalFault {
    pub fn new(point: &[f64], message: impl Into<String>) -> Self {
        EvalFault {
            point: point.to_vec(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Eval(#[from] EvalFault),

    #[error(transparent)]
    Parse(#[from] ParseError),

    #[error("unsupported: {0}")]
    Unsupported(String),

    /// The numerical preconditions of a method are not met (contraction
    /// constant too large, kernel mass fraction too small, ...).
    #[error("numerical refusal: {0}")]
    Refusal(String),

    #[error("no convergence after {iterations} iterations (last distance {last_distance:e})")]
    NonConvergence {
        iterations: usize,
        last_distance: f64,
    },
}

impl Error {
    /// Whether this error is a numerical refusal rather than a malformed input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Refusal(_) | Error::NonConvergence { .. } | Error::Eval(_)
        )
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
