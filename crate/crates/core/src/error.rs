use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("point lies outside the natural domain (margin {margin:e})")]
    Domain { margin: f64 },
    #[error("point lies outside the dual domain")]
    DualDomain,
    #[error("matrix is not positive semidefinite (smallest eigenvalue {min_eigenvalue:e})")]
    NotPositiveSemidefinite { min_eigenvalue: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("no convergence after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        iterations: usize,
        residual: f64,
        last: Vec<f64>,
    },
    #[error("descent condition violated by {excess:e}")]
    DescentViolation { excess: f64 },
    #[error("inexactness condition violated at step {step}")]
    Inexact { step: usize },
    #[error("infeasible: {0}")]
    Infeasible(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("model inconsistency: {0}")]
    ModelInconsistency(String),
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn at(self, iteration: usize) -> Error {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// Strips any iteration context and returns the underlying error.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = core::result::Result<T, E>;
