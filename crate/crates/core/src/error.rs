use thiserror::Error;

use crate::sdp::SolveStatus;

/// Errors raised by the dense linear-algebra kernel.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max deviation {deviation:.3e} > tol {tol:.3e})")]
    NonHermitian { deviation: f64, tol: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("scalar function undefined at retained eigenvalue {eigenvalue:.6e}")]
    Domain { eigenvalue: f64 },
    #[error("not a density matrix: {0}")]
    NotDensity(String),
    #[error("trace is {trace:.12} (expected 1)")]
    TraceNotOne { trace: f64 },
    #[error("empty matrix")]
    Empty,
}

/// Errors raised by the divergence, game and channel layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("SDP solve did not reach optimality: {status:?} ({detail})")]
    Solver { status: SolveStatus, detail: String },
    #[error("malformed SDP: {0}")]
    Model(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("the supports of the given operators have trivial intersection")]
    SupportEmpty,
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
