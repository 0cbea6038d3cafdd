//! Asymmetry and tail bounds for weighted sums of squared Gaussians,
//! exponentials and Rademacher products, with exact moments, exhaustive and
//! Monte Carlo estimators, and the closed-form exponential probability.

mod closed_form;
mod sampling;
mod tails;

pub use closed_form::{conjecture_scan, erlang_tail, exp_closed_form, ConjectureScan, CLOSED_FORM_GAP};
pub use sampling::{
    asym_prob, enumerate_bernoulli, finish_monte_carlo, shard_counts, shard_layout, sharpened_bound, split_pairs, Kind,
    Method,
    EXHAUSTIVE_MAX_N, SHARD_LEN,
};
pub use tails::{chebyshev_tail, chernoff_tail, empirical_tail, exp_ineq_5_3, TailBoundParams, TailEvent};

use alloc::vec::Vec;

use crate::math::{powf, sqrt};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProbError {
    #[error("moment order must exceed 2, got {0}")]
    MomentOrder(f64),
    #[error("moment bound must be positive, got {0}")]
    MomentBound(f64),
    #[error("all weights are zero")]
    Degenerate,
    #[error("weights must be finite")]
    NonFinite,
    #[error("closed form needs positive weights")]
    NonPositive,
    #[error("weights {0} and {1} are too close for the closed form; use Monte Carlo")]
    IllConditioned(usize, usize),
    #[error("{0} pair weights do not form a strict upper triangle")]
    BadPairCount(usize),
    #[error("exhaustive enumeration supports n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("method {0:?} does not apply to {1:?} weights")]
    Unsupported(Method, Kind),
    #[error("alpha must be positive")]
    BadAlpha,
    #[error("sample count must be positive")]
    NoSamples,
}

/// Which statement a probability estimate checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum LemmaId {
    /// Generic moment bound `0.25 tau^(-2/(t-2))`, here with `t = 4`.
    L2_1,
    /// Sharpened fourth-moment bound `(2 sqrt 3 - 3) / tau`.
    L2_2,
    /// Chi-square sums: `> 3/100`.
    L3_1,
    /// Gaussian quadratic forms below a fraction of their mean: `< 97/100`.
    L3_2,
    /// Exponential sums: `> 1/20`.
    L3_4,
    /// Complex Gaussian quadratic forms: `< 19/20`.
    L3_5,
    /// Rademacher products: `> 1/87`.
    L4_1,
}

impl LemmaId {
    pub const ALL: [LemmaId; 7] = [
        LemmaId::L2_1,
        LemmaId::L2_2,
        LemmaId::L3_1,
        LemmaId::L3_2,
        LemmaId::L3_4,
        LemmaId::L3_5,
        LemmaId::L4_1,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LemmaId::L2_1 => "L2_1",
            LemmaId::L2_2 => "L2_2",
            LemmaId::L3_1 => "L3_1",
            LemmaId::L3_2 => "L3_2",
            LemmaId::L3_4 => "L3_4",
            LemmaId::L3_5 => "L3_5",
            LemmaId::L4_1 => "L4_1",
        }
    }

    pub fn parse(s: &str) -> Option<LemmaId> {
        let s = s.trim().to_ascii_uppercase().replace('.', "_");
        LemmaId::ALL.into_iter().find(|l| l.name() == s)
    }

    /// Constant lower bound on the probability the lemma controls.
    pub fn constant(self) -> Option<f64> {
        match self {
            LemmaId::L3_1 | LemmaId::L3_2 => Some(3.0 / 100.0),
            LemmaId::L3_4 | LemmaId::L3_5 => Some(1.0 / 20.0),
            LemmaId::L4_1 => Some(1.0 / 87.0),
            LemmaId::L2_1 | LemmaId::L2_2 => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AsymmetryResult {
    pub lemma_id: LemmaId,
    pub analytic_lower_bound: f64,
    /// Probability of the lemma's event.
    pub estimate: f64,
    /// Probability of the mirrored event (`<= 0` instead of `>= 0` and so
    /// on); the bounds hold for both tails.
    pub estimate_opposite: f64,
    pub std_error: f64,
    /// 95% normal-approximation radius; zero for exact methods.
    pub confidence_radius: f64,
    pub method: Method,
    pub samples: u64,
}

impl AsymmetryResult {
    /// Both tails clear the bound after subtracting `k` standard errors.
    pub fn passes(&self, k: f64) -> bool {
        let lo = self.estimate.min(self.estimate_opposite) - k * self.std_error;
        lo > self.analytic_lower_bound
    }
}

/// `0.25 tau^(-2/(t-2))`, or the sharper `(2 sqrt 3 - 3) / tau` when `t = 4`.
pub fn asym_bound_moment(t: f64, tau: f64) -> Result<f64, ProbError> {
    if t == 4.0 {
        if !(tau > 0.0) {
            return Err(ProbError::MomentBound(tau));
        }
        return Ok((2.0 * sqrt(3.0) - 3.0) / tau);
    }
    asym_bound_generic(t, tau)
}

/// `0.25 tau^(-2/(t-2))` for any `t > 2`.
pub fn asym_bound_generic(t: f64, tau: f64) -> Result<f64, ProbError> {
    if !(t > 2.0) {
        return Err(ProbError::MomentOrder(t));
    }
    if !(tau > 0.0) {
        return Err(ProbError::MomentBound(tau));
    }
    Ok(0.25 * powf(tau, -2.0 / (t - 2.0)))
}

fn sums(taus: &[f64]) -> (f64, f64) {
    let s2: f64 = taus.iter().map(|t| t * t).sum();
    let s4: f64 = taus.iter().map(|t| t * t * t * t).sum();
    (s2, s4)
}

/// `E(sum tau_i (eta_i^2 - 1))^4 = 48 sum tau^4 + 12 (sum tau^2)^2`.
pub fn chi2_moment4(taus: &[f64]) -> f64 {
    let (s2, s4) = sums(taus);
    48.0 * s4 + 12.0 * s2 * s2
}

/// `E(sum tau_i (eta_i - 1))^4 = 6 sum tau^4 + 3 (sum tau^2)^2` for unit
/// exponentials.
pub fn exp_moment4(taus: &[f64]) -> f64 {
    let (s2, s4) = sums(taus);
    6.0 * s4 + 3.0 * s2 * s2
}

/// Strict upper-triangular weights `w_ij`, `i < j`, packed row by row.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairWeights {
    n: usize,
    w: Vec<f64>,
}

impl PairWeights {
    pub fn new(n: usize, w: Vec<f64>) -> Result<Self, ProbError> {
        if n < 2 || w.len() != n * (n - 1) / 2 {
            return Err(ProbError::BadPairCount(w.len()));
        }
        if w.iter().any(|v| !v.is_finite()) {
            return Err(ProbError::NonFinite);
        }
        Ok(Self { n, w })
    }

    /// Infers `n` from the packed length.
    pub fn from_packed(w: Vec<f64>) -> Result<Self, ProbError> {
        let len = w.len();
        let mut n = 2;
        while n * (n - 1) / 2 < len {
            n += 1;
        }
        Self::new(n, w)
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut w = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                w.push(f(i, j));
            }
        }
        Self { n, w }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn packed(&self) -> &[f64] {
        &self.w
    }

    fn index(&self, i: usize, j: usize) -> usize {
        let (i, j) = if i < j { (i, j) } else { (j, i) };
        i * (2 * self.n - i - 1) / 2 + (j - i - 1)
    }

    /// `w_ij` for `i != j` (symmetric access).
    pub fn get(&self, i: usize, j: usize) -> f64 {
        debug_assert_ne!(i, j);
        self.w[self.index(i, j)]
    }

    pub fn sum_sq(&self) -> f64 {
        self.w.iter().map(|v| v * v).sum()
    }
}

/// Fourth moment of `sum_{i<j} w_ij xi_i xi_j` for independent uniform signs:
/// `sum w^4 + 6 sum_{e<f} w_e^2 w_f^2 + W`, where `W` adds `24` times the
/// product of the edge weights over every 4-cycle.
pub fn bernoulli_moment4(w: &PairWeights) -> f64 {
    let n = w.n;
    let s2 = w.sum_sq();
    let s4: f64 = w.w.iter().map(|v| v * v * v * v).sum();
    // sum_{e<f} w_e^2 w_f^2 = ((sum w^2)^2 - sum w^4) / 2
    let pairs = 0.5 * (s2 * s2 - s4);
    let mut cycles = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                for l in (k + 1)..n {
                    let (ij, ik, il) = (w.get(i, j), w.get(i, k), w.get(i, l));
                    let (jk, jl, kl) = (w.get(j, k), w.get(j, l), w.get(k, l));
                    cycles += ij * jk * kl * il + ij * jl * kl * ik + ik * jk * jl * il;
                }
            }
        }
    }
    s4 + 6.0 * pairs + 24.0 * cycles
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn moment_bounds() {
        let sharp = 2.0 * 3f64.sqrt() - 3.0;
        assert!((asym_bound_moment(4.0, 15.0).unwrap() - sharp / 15.0).abs() < 1e-15);
        assert!(asym_bound_moment(4.0, 15.0).unwrap() > 3.0 / 100.0);
        assert!(asym_bound_moment(4.0, 9.0).unwrap() > 1.0 / 20.0);
        assert!(asym_bound_moment(4.0, 39.0).unwrap() > 1.0 / 87.0);
        assert!((asym_bound_moment(4.0, 9.0).unwrap() - 0.051_566_846_1).abs() < 1e-9);
        assert_eq!(asym_bound_moment(2.0, 1.0), Err(ProbError::MomentOrder(2.0)));
        assert!((asym_bound_generic(6.0, 16.0).unwrap() - 0.0625).abs() < 1e-15);
        assert!(sharp > 9.0 / 20.0);
    }

    #[test]
    fn moment_formulas() {
        assert_eq!(chi2_moment4(&[1.0]), 60.0);
        assert_eq!(chi2_moment4(&[1.0, 1.0]), 144.0);
        assert_eq!(chi2_moment4(&[0.0, 0.0]), 0.0);
        assert_eq!(exp_moment4(&[1.0]), 9.0);
        assert_eq!(exp_moment4(&[1.0, 1.0]), 24.0);
        assert_eq!(exp_moment4(&[0.0]), 0.0);
    }

    #[test]
    fn pair_indexing() {
        let w = PairWeights::from_fn(5, |i, j| (10 * i + j) as f64);
        for i in 0..5 {
            for j in 0..5 {
                if i != j {
                    assert_eq!(w.get(i, j), (10 * i.min(j) + i.max(j)) as f64);
                }
            }
        }
        assert_eq!(PairWeights::from_packed(vec![1.0; 6]).unwrap().n(), 4);
        assert!(PairWeights::from_packed(vec![1.0; 5]).is_err());
    }

    #[test]
    fn bernoulli_moment_small() {
        let w = PairWeights::new(2, vec![1.0]).unwrap();
        assert_eq!(bernoulli_moment4(&w), 1.0);
        // All-ones on 4 vertices: Psi = ((sum xi)^2 - 4) / 2, enumerated by hand.
        let w = PairWeights::from_fn(4, |_, _| 1.0);
        let mut m4 = 0.0;
        for mask in 0..16u32 {
            let s: f64 = (0..4).map(|b| if mask >> b & 1 == 1 { 1.0 } else { -1.0 }).sum();
            let psi = (s * s - 4.0) / 2.0;
            m4 += psi.powi(4) / 16.0;
        }
        assert!((bernoulli_moment4(&w) - m4).abs() < 1e-12);
    }

    #[test]
    fn lemma_ids_parse() {
        for l in LemmaId::ALL {
            assert_eq!(LemmaId::parse(l.name()), Some(l));
        }
        assert_eq!(LemmaId::parse("l4.1"), Some(LemmaId::L4_1));
    }
}
