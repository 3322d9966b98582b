use thiserror::Error;

use crate::steady::SteadyStateResult;

pub type Result<T> = std::result::Result<T, Error>;

/// Coarse classification used for process exit codes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ErrorKind {
    Parse,
    Precondition,
    Numeric,
}

impl ErrorKind {
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorKind::Parse => 1,
            ErrorKind::Precondition => 2,
            ErrorKind::Numeric => 3,
        }
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}, column {column}: {message}")]
    Syntax { line: usize, column: usize, message: String },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("duplicate reaction {from} -> {to}")]
    DuplicateArc { from: usize, to: usize },
    #[error("rate constant must be positive, got {0}")]
    NonPositiveRate(f64),
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("network is not weakly reversible")]
    NotWeaklyReversible,
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("state must be strictly positive (component {index} is {value})")]
    NonPositiveState { index: usize, value: f64 },
    #[error("invalid index set: {0}")]
    InvalidIndexSet(String),
    #[error("vector is not in the required subspace (residual {residual:e})")]
    NotInSubspace { residual: f64 },
    #[error("exponent {0} too large; use the scaled pairing instead")]
    Overflow(f64),
    #[error("Birch point iteration failed: {0}")]
    BirchFailed(String),
    #[error("threshold is not representable in double precision: {0}")]
    ThresholdOverflow(String),
    #[error("degenerate block decomposition: {0}")]
    DegenerateBlock(String),
    #[error("integration failed: {0}")]
    Integration(String),
    #[error("steady-state search did not converge (best species residual {:e})", .0.residual_species)]
    NoConvergence(Box<SteadyStateResult>),
}

impl Error {
    pub fn kind(&self) -> ErrorKind {
        match self {
            Error::Syntax { .. }
            | Error::InvalidNetwork(_)
            | Error::DuplicateArc { .. }
            | Error::NonPositiveRate(_) => ErrorKind::Parse,
            Error::Precondition(_)
            | Error::NotWeaklyReversible
            | Error::DimensionMismatch { .. }
            | Error::NonPositiveState { .. }
            | Error::InvalidIndexSet(_)
            | Error::NotInSubspace { .. } => ErrorKind::Precondition,
            Error::Overflow(_)
            | Error::BirchFailed(_)
            | Error::ThresholdOverflow(_)
            | Error::DegenerateBlock(_)
            | Error::Integration(_)
            | Error::NoConvergence(_) => ErrorKind::Numeric,
        }
    }
}
