//! Randomized rounding of relaxation solutions to feasible vectors, and the
//! ratio certificates that go with each scheme.
//!
//! Every scheme rescales each sample by its own binding constraint, so every
//! sample with the right sign pattern yields a feasible point, and keeps the
//! best. Separately it counts how often the fixed-constant event used in the
//! existence argument for the scheme occurs.

use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::linalg::{numerical_rank, Definiteness, LinalgError, Mat, SymMatrix};
use crate::math::{ln, sqrt};
use crate::rank::{factorize, LowRankSolution, RANK_TOL};
use crate::rng::stream;
use crate::sdp::{Field, QcqpInstance, SdpSolution, Sense, SolveStatus};

const PI: f64 = core::f64::consts::PI;

/// Samples per run unless overridden.
pub const DEFAULT_SAMPLES: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Scheme {
    /// Gaussian samples, scaled up to the smallest constraint (`>=` form).
    GaussianMin,
    /// Sign vectors through a factor that diagonalizes the objective.
    SignMax,
    /// Gaussian samples, scaled down to the largest constraint (`<=` form).
    GaussianMax,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::GaussianMin => "gaussian-min",
            Scheme::SignMax => "sign-max",
            Scheme::GaussianMax => "gaussian-max",
        }
    }

    pub fn parse(s: &str) -> Option<Scheme> {
        [Scheme::GaussianMin, Scheme::SignMax, Scheme::GaussianMax]
            .into_iter()
            .find(|x| x.name() == s.trim())
    }

    /// Scheme used for an instance when none is requested.
    pub fn default_for(sense: Sense) -> Scheme {
        match sense {
            Sense::Minimize => Scheme::GaussianMin,
            Sense::Maximize => Scheme::GaussianMax,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundingParams {
    pub scheme: Scheme,
    pub num_samples: usize,
    pub seed: u64,
    /// Threshold on `min_k x*A_k x` for the minimization event.
    pub gamma: Option<f64>,
    /// Objective multiple for the minimization event.
    pub mu: Option<f64>,
    /// Threshold on `max_k x*A_k x` for the maximization events.
    pub alpha: Option<f64>,
}

impl RoundingParams {
    pub fn new(scheme: Scheme, num_samples: usize, seed: u64) -> Self {
        Self {
            scheme,
            num_samples,
            seed,
            gamma: None,
            mu: None,
            alpha: None,
        }
    }

    pub fn validate(&self) -> Result<(), RoundingError> {
        if self.num_samples == 0 {
            return Err(RoundingError::InvalidParams("num_samples must be at least 1"));
        }
        if let Some(g) = self.gamma {
            if !(g > 0.0 && g <= 1.0) {
                return Err(RoundingError::InvalidParams("gamma must lie in (0, 1]"));
            }
        }
        if matches!(self.mu, Some(m) if !(m > 1.0)) {
            return Err(RoundingError::InvalidParams("mu must exceed 1"));
        }
        if matches!(self.alpha, Some(a) if !(a > 1.0)) {
            return Err(RoundingError::InvalidParams("alpha must exceed 1"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoundingReport {
    pub scheme: Scheme,
    pub seed: u64,
    pub samples: usize,
    /// Best feasible point in the working space (`[Re z; Im z]` when complex).
    /// Empty when no sample was usable.
    pub best_x: Vec<f64>,
    pub best_objective: f64,
    pub best_sample: Option<usize>,
    pub v_sdp: f64,
    /// `best / v_sdp` (minimization) or `v_sdp / best` (maximization).
    pub empirical_ratio: f64,
    pub samples_feasible: usize,
    /// Samples with no usable scaling (sign condition violated).
    pub samples_discarded: usize,
    /// Samples in the fixed-constant event of the scheme.
    pub joint_event_count: usize,
    pub event_gamma: Option<f64>,
    pub event_mu: Option<f64>,
    pub event_alpha: Option<f64>,
    /// `+inf` when no bound applies to the instance.
    pub theoretical_bound: f64,
    pub bound_applicable: bool,
    pub certificate_satisfied: bool,
}

impl RoundingReport {
    pub fn joint_event_frequency(&self) -> f64 {
        self.joint_event_count as f64 / self.samples as f64
    }
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RoundingError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("scheme {scheme:?} does not apply to a {sense:?} instance")]
    WrongSense { scheme: Scheme, sense: Sense },
    #[error("invalid rounding parameters: {0}")]
    InvalidParams(&'static str),
    #[error("rounding needs an optimal relaxation solution, got {0:?}")]
    NotOptimal(SolveStatus),
    #[error("no sample could be scaled to a feasible point ({} of {} discarded)", .0.samples_discarded, .0.samples)]
    NoFeasibleSample(alloc::boxed::Box<RoundingReport>),
}

/// Number of constraints besides the first, the count the ratio bounds use.
fn m_of(inst: &QcqpInstance) -> usize {
    inst.m()
}

/// `v_qp / v_sdp` bound for minimization with one indefinite constraint:
/// `10^6 m^2 / pi` (real), `2400 m` (complex, with exactness for `m <= 3`).
/// A single constraint is always exact.
pub fn bound_certificate_min(m: usize, field: Field) -> f64 {
    if m == 0 {
        return 1.0;
    }
    let m = m as f64;
    match field {
        Field::Real => 1e6 * m * m / PI,
        Field::Complex if m <= 3.0 => 1.0,
        Field::Complex => 2400.0 * m,
    }
}

/// `2 log(174 m mu)` with `m, mu >= 1`.
pub fn bound_sign_max(m: usize, mu: usize) -> f64 {
    2.0 * ln(174.0 * m.max(1) as f64 * mu.max(1) as f64)
}

/// Lower-tail bound `Prob{x*Ax < gamma E x*Ax}` for PSD `A` and a rank-`r`
/// covariance: `max{sqrt(gamma), 2(r-1)gamma/(pi-2)}` (real),
/// `max{4 gamma / 3, 16 (r-1)^2 gamma^2}` (complex).
pub fn quoted_tail_bound(gamma: f64, r: usize, field: Field) -> f64 {
    let r1 = r.saturating_sub(1) as f64;
    match field {
        Field::Real => sqrt(gamma).max(2.0 * r1 * gamma / (PI - 2.0)),
        Field::Complex => (4.0 * gamma / 3.0).max(16.0 * r1 * r1 * gamma * gamma),
    }
}

/// Upper-tail bound `2 m mu exp(-alpha / 2)` for the PSD constraints under
/// sign rounding.
pub fn quoted_sign_tail_bound(m: usize, mu: usize, alpha: f64) -> f64 {
    2.0 * m as f64 * mu as f64 * crate::math::exp(-0.5 * alpha)
}

/// Default `(gamma, mu)` of the minimization event.
pub fn default_min_event(m: usize, field: Field) -> (f64, f64) {
    let m = m.max(1) as f64;
    match field {
        Field::Real => (PI / (1e4 * m * m), 100.0),
        Field::Complex => (1.0 / (40.0 * m), 60.0),
    }
}

/// Union-bound lower estimate of the minimization event probability.
pub fn min_event_lower_bound(m: usize, r: usize, gamma: f64, mu: f64, field: Field) -> f64 {
    let asym = match field {
        Field::Real => 3.0 / 100.0,
        Field::Complex => 1.0 / 20.0,
    };
    asym - m as f64 * quoted_tail_bound(gamma, r, field) - 1.0 / mu
}

/// Data-dependent certificate for the `<=` form.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BoundCertificate {
    /// Event threshold; the ratio bound equals it.
    pub alpha: f64,
    pub bound: f64,
    /// `||A_k X||_F` (non-symmetric product), one per constraint.
    pub norms: Vec<f64>,
    pub indefinite: Vec<usize>,
    pub semidefinite: Vec<usize>,
}

/// `alpha = 1 + max{a + b log|D|, min{(a + b log|I|) max_I ||A_k X||_F,
/// sqrt(c sum_I ||A_k X||_F^2)}}` with `(a, b, c) = (20, 8, 200)` real and
/// `(15, 4, 40)` complex. `D` holds the PSD constraints and `I` the rest.
/// Terms over an empty index set are dropped.
pub fn bound_certificate_max(inst: &QcqpInstance, x: &SymMatrix) -> BoundCertificate {
    let (a, b, c) = match inst.field() {
        Field::Real => (20.0, 8.0, 200.0),
        Field::Complex => (15.0, 4.0, 40.0),
    };
    // Embedded products carry every singular value twice.
    let norm_scale = match inst.field() {
        Field::Real => 1.0,
        Field::Complex => 1.0 / sqrt(2.0),
    };
    let xm = x.to_mat();
    let norms: Vec<f64> = inst
        .constraints_work()
        .iter()
        .map(|ak| ak.mul_mat(&xm).frobenius_norm() * norm_scale)
        .collect();
    let semidefinite = inst.indices_tagged(Definiteness::Psd);
    let indefinite: Vec<usize> = (0..inst.num_constraints())
        .filter(|k| inst.tags()[*k] != Definiteness::Psd)
        .collect();
    let mut terms: Vec<f64> = Vec::new();
    if !semidefinite.is_empty() {
        terms.push(a + b * ln(semidefinite.len() as f64));
    }
    if !indefinite.is_empty() {
        let nmax = indefinite.iter().map(|&k| norms[k]).fold(0.0, f64::max);
        let ssq: f64 = indefinite.iter().map(|&k| norms[k] * norms[k]).sum();
        terms.push(((a + b * ln(indefinite.len() as f64)) * nmax).min(sqrt(c * ssq)));
    }
    let alpha = 1.0 + terms.into_iter().fold(f64::NEG_INFINITY, f64::max);
    BoundCertificate {
        alpha,
        bound: alpha,
        norms,
        indefinite,
        semidefinite,
    }
}

fn gaussian(rng: &mut crate::rng::Rng, len: usize, std: f64) -> Vec<f64> {
    (0..len).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn field_std(field: Field) -> f64 {
    match field {
        // Real and imaginary parts of a unit complex normal have variance 1/2.
        Field::Complex => sqrt(0.5),
        Field::Real => 1.0,
    }
}

struct Tracker {
    sense: Sense,
    best: Option<(usize, f64, Vec<f64>)>,
    feasible: usize,
    discarded: usize,
    events: usize,
}

impl Tracker {
    fn new(sense: Sense) -> Self {
        Self {
            sense,
            best: None,
            feasible: 0,
            discarded: 0,
            events: 0,
        }
    }

    fn offer(&mut self, i: usize, value: f64, x: impl FnOnce() -> Vec<f64>) {
        self.feasible += 1;
        let better = match &self.best {
            None => true,
            Some((_, v, _)) => match self.sense {
                Sense::Minimize => value < *v,
                Sense::Maximize => value > *v,
            },
        };
        if better {
            self.best = Some((i, value, x()));
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn finish(
        self,
        p: &RoundingParams,
        v_sdp: f64,
        bound: Option<f64>,
        gamma: Option<f64>,
        mu: Option<f64>,
        alpha: Option<f64>,
    ) -> Result<RoundingReport, RoundingError> {
        let (best_sample, best_objective, best_x) = match self.best {
            Some((i, v, x)) => (Some(i), v, x),
            None => (None, f64::NAN, Vec::new()),
        };
        let empirical_ratio = match self.sense {
            Sense::Minimize => ratio(best_objective, v_sdp),
            Sense::Maximize => ratio(v_sdp, best_objective),
        };
        let theoretical_bound = bound.unwrap_or(f64::INFINITY);
        let report = RoundingReport {
            scheme: p.scheme,
            seed: p.seed,
            samples: p.num_samples,
            best_x,
            best_objective,
            best_sample,
            v_sdp,
            empirical_ratio,
            samples_feasible: self.feasible,
            samples_discarded: self.discarded,
            joint_event_count: self.events,
            event_gamma: gamma,
            event_mu: mu,
            event_alpha: alpha,
            theoretical_bound,
            bound_applicable: bound.is_some(),
            certificate_satisfied: bound.is_some() && empirical_ratio <= theoretical_bound,
        };
        if best_sample.is_none() {
            return Err(RoundingError::NoFeasibleSample(alloc::boxed::Box::new(report)));
        }
        Ok(report)
    }
}

/// `num / den` for nonnegative quantities, `+inf` when only the denominator
/// vanishes and `1` when both do.
fn ratio(num: f64, den: f64) -> f64 {
    const EPS: f64 = 1e-12;
    if den.abs() <= EPS {
        if num.abs() <= EPS {
            1.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

fn check(inst: &QcqpInstance, p: &RoundingParams, want: Sense) -> Result<(), RoundingError> {
    p.validate()?;
    if inst.sense() != want {
        return Err(RoundingError::WrongSense {
            scheme: p.scheme,
            sense: inst.sense(),
        });
    }
    Ok(())
}

/// Gaussian rounding for the `>=` form. Sample `i` draws `xi ~ N(0, X)`
/// (complex normal in the complex case) and scales it by
/// `1 / sqrt(min_k xi*A_k xi)` when that minimum is positive.
pub fn gaussian_round_min(
    inst: &QcqpInstance,
    low: &LowRankSolution,
    p: &RoundingParams,
) -> Result<RoundingReport, RoundingError> {
    check(inst, p, Sense::Minimize)?;
    let field = inst.field();
    let m = m_of(inst);
    let (g0, mu0) = default_min_event(m, field);
    let gamma = p.gamma.unwrap_or(g0);
    let mu = p.mu.unwrap_or(mu0);
    let v_sdp = low.objective_value;
    let std = field_std(field);
    let mut tr = Tracker::new(Sense::Minimize);
    for i in 0..p.num_samples {
        let mut rng = stream(p.seed, i as u64);
        let g = gaussian(&mut rng, low.u.cols(), std);
        let xi = low.u.mul_vec(&g);
        let qmin = inst
            .constraint_values(&xi)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let obj = inst.objective_at(&xi);
        if qmin >= gamma && obj <= mu * v_sdp {
            tr.events += 1;
        }
        if qmin > 0.0 {
            let s = 1.0 / sqrt(qmin);
            tr.offer(i, obj / qmin, || xi.iter().map(|v| v * s).collect());
        } else {
            tr.discarded += 1;
        }
    }
    let bound = (inst.num_indefinite() <= 1).then(|| bound_certificate_min(m, field));
    tr.finish(p, v_sdp, bound, Some(gamma), Some(mu), None)
}

/// `mu = min{m, max_k rank(A_k X)}` for `X = U U^T`.
fn effective_mu(inst: &QcqpInstance, u: &Mat) -> usize {
    let mut best = 0;
    for a in inst.constraints_work() {
        let au = a.mul_mat(u);
        let gram = SymMatrix::from_fn(au.cols(), |i, j| (0..au.rows()).map(|k| au[(k, i)] * au[(k, j)]).sum());
        let r = gram
            .eig()
            .map(|s| numerical_rank(&s.eigenvalues, RANK_TOL * RANK_TOL))
            .unwrap_or(au.cols());
        best = best.max(r);
    }
    let r = match inst.field() {
        Field::Real => best,
        Field::Complex => best.div_ceil(2),
    };
    r.min(m_of(inst).max(1)).max(1)
}

/// Sign rounding for the `<=` form: with `V = U Q` where `Q` diagonalizes
/// `U^T C U`, sample `xi` uniform on `{-1, 1}^r` and take
/// `x = V xi / sqrt(max_k xi^T V^T A_k V xi)`. Every such `x` has objective
/// `Tr(CX) / max_k (...)`.
pub fn sign_round_max(
    inst: &QcqpInstance,
    low: &LowRankSolution,
    p: &RoundingParams,
) -> Result<RoundingReport, RoundingError> {
    check(inst, p, Sense::Maximize)?;
    let field = inst.field();
    let m = m_of(inst);
    let u = &low.u;
    let c_hat = inst.objective_work().congruence(u);
    let q = c_hat.eig()?.eigenvectors;
    let v = u.matmul(&q);
    let a_hat: Vec<SymMatrix> = inst.constraints_work().iter().map(|a| a.congruence(&v)).collect();
    let c_diag = inst.objective_work().congruence(&v);
    let mu_eff = effective_mu(inst, u);
    let bound_value = bound_sign_max(m, mu_eff);
    let alpha = p.alpha.unwrap_or(bound_value);
    let v_sdp = low.objective_value;
    let rhs = field.rhs();
    let mut tr = Tracker::new(Sense::Maximize);
    for i in 0..p.num_samples {
        let mut rng = stream(p.seed, i as u64);
        let xi: Vec<f64> = (0..v.cols())
            .map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 })
            .collect();
        let qmax = a_hat
            .iter()
            .map(|a| a.quad_form(&xi))
            .fold(f64::NEG_INFINITY, f64::max);
        if qmax <= 0.0 {
            tr.discarded += 1;
            continue;
        }
        // Embedded sign vectors see every trace twice.
        if qmax / rhs <= alpha {
            tr.events += 1;
        }
        let obj = c_diag.quad_form(&xi) / qmax;
        let s = 1.0 / sqrt(qmax);
        tr.offer(i, obj, || v.mul_vec(&xi).iter().map(|t| t * s).collect());
    }
    let bound = (field == Field::Real && inst.num_indefinite() <= 1).then_some(bound_value);
    tr.finish(p, v_sdp, bound, None, None, Some(alpha))
}

/// Gaussian rounding for the `<=` form with any number of indefinite
/// constraints: `xi ~ N(0, X)`, `x = xi / sqrt(max_k xi*A_k xi)`.
pub fn gaussian_round_max(
    inst: &QcqpInstance,
    sol: &SdpSolution,
    p: &RoundingParams,
) -> Result<RoundingReport, RoundingError> {
    check(inst, p, Sense::Maximize)?;
    if sol.status != SolveStatus::Optimal {
        return Err(RoundingError::NotOptimal(sol.status));
    }
    let field = inst.field();
    let u = factorize(&sol.x, RANK_TOL)?;
    let cert = bound_certificate_max(inst, &sol.x);
    let alpha = p.alpha.unwrap_or(cert.alpha);
    let v_sdp = sol.objective_value;
    let std = field_std(field);
    let mut tr = Tracker::new(Sense::Maximize);
    for i in 0..p.num_samples {
        let mut rng = stream(p.seed, i as u64);
        let g = gaussian(&mut rng, u.cols(), std);
        let xi = u.mul_vec(&g);
        let qmax = inst
            .constraint_values(&xi)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        let obj = inst.objective_at(&xi);
        if qmax <= alpha && obj >= v_sdp {
            tr.events += 1;
        }
        if qmax > 0.0 {
            let s = 1.0 / sqrt(qmax);
            tr.offer(i, obj / qmax, || xi.iter().map(|v| v * s).collect());
        } else {
            tr.discarded += 1;
        }
    }
    tr.finish(p, v_sdp, Some(cert.bound), None, None, Some(alpha))
}

/// Runs the scheme named in `p` from a relaxation solution and its reduced
/// form.
pub fn round(
    inst: &QcqpInstance,
    sol: &SdpSolution,
    low: &LowRankSolution,
    p: &RoundingParams,
) -> Result<RoundingReport, RoundingError> {
    match p.scheme {
        Scheme::GaussianMin => gaussian_round_min(inst, low, p),
        Scheme::SignMax => sign_round_max(inst, low, p),
        Scheme::GaussianMax => gaussian_round_max(inst, sol, p),
    }
}

/// Factor of a given relaxation matrix without any reduction, for rounding
/// a hand-built solution.
pub fn low_rank_from(inst: &QcqpInstance, x: &SymMatrix) -> Result<LowRankSolution, LinalgError> {
    let u = factorize(x, RANK_TOL)?;
    let rank = match inst.field() {
        Field::Real => u.cols(),
        Field::Complex => u.cols().div_ceil(2),
    };
    let x = u.matmul_t(&u);
    let x = SymMatrix::from_fn(x.rows(), |i, j| 0.5 * (x[(i, j)] + x[(j, i)]));
    Ok(LowRankSolution {
        objective_value: inst.relaxed_objective(&x),
        u,
        rank,
        x,
        bound_met: false,
        steps: 0,
    })
}
