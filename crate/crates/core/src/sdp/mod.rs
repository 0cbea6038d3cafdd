//! Semidefinite relaxations and the interior-point solver behind them.

pub mod ipm;
mod problem;
mod slater;

pub use problem::{
    build_relaxation, solve, solve_with, symmetrize_complex, Field, QcqpInstance, Relaxation,
    SdpSolution, Sense, SolveStatus,
};
pub use slater::{slater_check, Probe, SlaterReport, SLATER_TOL};

use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SdpError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("instance needs at least one constraint")]
    NoConstraints,
    #[error("matrix dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("real instance has a matrix with nonzero imaginary part")]
    ComplexDataInRealInstance,
}
