//! Revised unambiguous discrimination of quantum states and channels.
//!
//! Dense complex linear algebra, a small SDP solver, Rényi-type divergences
//! and their radii, the state discrimination game with abstention, and the
//! adaptive channel discrimination bounds.

// `!(x > 0.0)` style tests are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channelgame;
pub mod divergences;
pub mod error;
pub mod linalg;
pub mod random;
pub mod sdp;
pub mod stategame;
pub mod validate;

pub use error::{Error, LinalgError, Result};
pub use linalg::{CMatrix, DensityMatrix, HermitianOperator, Spectrum, TraceOneHermitian, C64};
pub use sdp::{SdpProblem, SdpSolution, SolveStatus, SolverOptions};
