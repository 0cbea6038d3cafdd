//! Solve, reduce and round one instance.

use hquad_core::rank::{reduce_rank, LowRankSolution, RankError};
use hquad_core::rng::{derive_seed, label};
use hquad_core::rounding::{low_rank_from, round, RoundingError, RoundingParams, RoundingReport, Scheme};
use hquad_core::sdp::{solve, QcqpInstance, SdpError, SdpSolution};
use hquad_core::SolveStatus;

#[derive(Debug, thiserror::Error)]
pub enum PipelineError {
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error("relaxation is {}", crate::io::status_name(.0.status))]
    NotOptimal(Box<SdpSolution>),
    #[error(transparent)]
    Rank(#[from] RankError),
    #[error(transparent)]
    Rounding(#[from] RoundingError),
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub solution: SdpSolution,
    pub low: LowRankSolution,
    pub report: RoundingReport,
}

/// Seed the rank reduction draws from, given the rounding seed.
pub fn rank_seed(seed: u64) -> u64 {
    derive_seed(seed, label("rank"), 0)
}

/// Solves the relaxation and rounds with `params`. The sign and Gaussian
/// minimization schemes run on a rank-reduced solution; Gaussian
/// maximization samples from the solver's matrix directly.
pub fn solve_and_round(inst: &QcqpInstance, params: &RoundingParams) -> Result<Outcome, PipelineError> {
    let solution = solve(inst)?;
    round_solution(inst, solution, params)
}

pub fn round_solution(inst: &QcqpInstance, solution: SdpSolution, params: &RoundingParams) -> Result<Outcome, PipelineError> {
    if solution.status != SolveStatus::Optimal {
        return Err(PipelineError::NotOptimal(Box::new(solution)));
    }
    let low = match params.scheme {
        Scheme::GaussianMin | Scheme::SignMax => reduce_rank(&solution, inst, rank_seed(params.seed))?,
        Scheme::GaussianMax => low_rank_from(inst, &solution.x).map_err(RankError::from)?,
    };
    let report = round(inst, &solution, &low, params)?;
    Ok(Outcome { solution, low, report })
}
