use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};

use super::ProbError;
use crate::math::{exp, sqrt};
use crate::rng::stream;
use crate::sdp::Field;

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TailBoundParams {
    pub lambdas: Vec<f64>,
    /// `sqrt(sum lambda_i^2)`
    pub sigma: f64,
    /// `max{max lambda_i, 0}`
    pub delta: f64,
    pub alpha: f64,
    pub field: Field,
}

impl TailBoundParams {
    pub fn new(lambdas: Vec<f64>, alpha: f64, field: Field) -> Result<Self, ProbError> {
        if lambdas.iter().any(|v| !v.is_finite()) {
            return Err(ProbError::NonFinite);
        }
        if !(alpha > 0.0) {
            return Err(ProbError::BadAlpha);
        }
        let (sigma, delta) = sigma_delta(&lambdas);
        Ok(Self {
            lambdas,
            sigma,
            delta,
            alpha,
            field,
        })
    }

    /// Stored `sigma` and `delta` agree with the weights.
    pub fn is_consistent(&self) -> bool {
        let (s, d) = sigma_delta(&self.lambdas);
        (s - self.sigma).abs() <= 1e-12 * s.max(1.0) && (d - self.delta).abs() <= 1e-12 * d.max(1.0)
    }
}

fn sigma_delta(l: &[f64]) -> (f64, f64) {
    let sigma = sqrt(l.iter().map(|v| v * v).sum());
    let delta = l.iter().cloned().fold(0.0, f64::max);
    (sigma, delta)
}

/// Bound on `Prob{sum lambda_i eta_i^2 - sum lambda_i >= alpha sigma}`:
/// `exp(-min{alpha, sigma/delta} alpha / 8)` for real Gaussians and `/ 4`
/// for complex ones. `sigma / delta` is infinite when `delta = 0`.
pub fn chernoff_tail(p: &TailBoundParams) -> Result<f64, ProbError> {
    if p.sigma == 0.0 {
        return Err(ProbError::Degenerate);
    }
    let ratio = if p.delta == 0.0 {
        f64::INFINITY
    } else {
        p.sigma / p.delta
    };
    let k = match p.field {
        Field::Real => 8.0,
        Field::Complex => 4.0,
    };
    Ok(exp(-p.alpha.min(ratio) * p.alpha / k))
}

/// Variance bound `2 sum lambda_i^2 / (alpha - 1)^2` on
/// `Prob{sum lambda_i eta_i^2 > alpha}` when `sum lambda_i <= 1`.
pub fn chebyshev_tail(lambdas: &[f64], alpha: f64) -> Result<f64, ProbError> {
    if !(alpha > 1.0) {
        return Err(ProbError::BadAlpha);
    }
    let s: f64 = lambdas.iter().map(|v| v * v).sum();
    Ok(2.0 * s / ((alpha - 1.0) * (alpha - 1.0)))
}

/// `1/(1-t) <= e^(t + t^2)`, which holds for `t <= 1/2`.
pub fn exp_ineq_5_3(t: f64) -> bool {
    1.0 / (1.0 - t) <= exp(t + t * t)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TailEvent {
    /// `sum lambda_i (eta_i^2 - 1) >= alpha sigma`
    Centered { alpha: f64 },
    /// `sum lambda_i eta_i^2 > alpha`
    Raw { alpha: f64 },
}

/// Monte Carlo frequency of `event` and its standard error. Complex
/// Gaussians enter through `|eta|^2`, a unit exponential.
pub fn empirical_tail(lambdas: &[f64], event: TailEvent, field: Field, samples: u64, seed: u64) -> Result<(f64, f64), ProbError> {
    if samples == 0 {
        return Err(ProbError::NoSamples);
    }
    let (sigma, _) = sigma_delta(lambdas);
    let mean: f64 = lambdas.iter().sum();
    let mut hits = 0u64;
    for (s, len) in super::shard_layout(samples).into_iter().enumerate() {
        let mut rng = stream(seed, s as u64);
        for _ in 0..len {
            let mut v = 0.0;
            for &l in lambdas {
                let e: f64 = match field {
                    Field::Real => {
                        let z: f64 = rng.sample(StandardNormal);
                        z * z
                    }
                    Field::Complex => rng.sample(Exp1),
                };
                v += l * e;
            }
            let hit = match event {
                TailEvent::Centered { alpha } => v - mean >= alpha * sigma,
                TailEvent::Raw { alpha } => v > alpha,
            };
            hits += hit as u64;
        }
    }
    let p = hits as f64 / samples as f64;
    Ok((p, sqrt(p * (1.0 - p) / samples as f64)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn chernoff_values() {
        let p = TailBoundParams::new(vec![1.0], 2.0, Field::Real).unwrap();
        assert!((chernoff_tail(&p).unwrap() - (-0.25f64).exp()).abs() < 1e-15);
        let p = TailBoundParams::new(vec![1.0], 2.0, Field::Complex).unwrap();
        assert!((chernoff_tail(&p).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let p = TailBoundParams::new(vec![1.0, -1.0], 3.0, Field::Real).unwrap();
        assert!((p.sigma - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(p.delta, 1.0);
        let want = (-3.0 * 2f64.sqrt() / 8.0).exp();
        assert!((chernoff_tail(&p).unwrap() - want).abs() < 1e-15);
        // delta = 0: the min picks alpha.
        let p = TailBoundParams::new(vec![-1.0], 2.0, Field::Real).unwrap();
        assert!((chernoff_tail(&p).unwrap() - (-0.5f64).exp()).abs() < 1e-15);
        let p = TailBoundParams::new(vec![0.0], 2.0, Field::Real).unwrap();
        assert_eq!(chernoff_tail(&p), Err(ProbError::Degenerate));
        assert!(p.is_consistent());
    }

    #[test]
    fn chebyshev_values() {
        assert_eq!(chebyshev_tail(&[1.0], 3.0).unwrap(), 0.5);
        assert!((chebyshev_tail(&[1.0], 1.0 + 200f64.sqrt()).unwrap() - 0.01).abs() < 1e-15);
        let a = chebyshev_tail(&[0.3, -0.2], 2.5).unwrap();
        let b = chebyshev_tail(&[0.9, -0.6], 2.5).unwrap();
        assert!((b - 9.0 * a).abs() < 1e-14);
        assert_eq!(chebyshev_tail(&[1.0], 1.0), Err(ProbError::BadAlpha));
    }

    #[test]
    fn inequality_5_3() {
        assert!(exp_ineq_5_3(0.0));
        assert!(exp_ineq_5_3(0.5));
        assert!(exp_ineq_5_3(-5.0));
        assert!(!exp_ineq_5_3(0.9));
    }

    #[test]
    fn empirical_single_square() {
        // Prob{eta^2 > 1} = erfc(1/sqrt 2)
        let (p, se) = empirical_tail(&[1.0], TailEvent::Raw { alpha: 1.0 }, Field::Real, 100_000, 1).unwrap();
        assert!((p - 0.317_310_507_862_914).abs() < 4.0 * se);
        let (p, se) = empirical_tail(&[1.0], TailEvent::Raw { alpha: 1.0 }, Field::Complex, 100_000, 1).unwrap();
        assert!((p - (-1f64).exp()).abs() < 4.0 * se);
    }
}
