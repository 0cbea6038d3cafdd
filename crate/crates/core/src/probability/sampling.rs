use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::{Exp1, StandardNormal};

use super::{asym_bound_moment, bernoulli_moment4, chi2_moment4, exp_moment4, AsymmetryResult, LemmaId, PairWeights, ProbError};
use crate::math::sqrt;
use crate::rng::stream;

/// Which weighted sum is tested.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Kind {
    /// `sum tau_i (eta_i^2 - 1)`, `eta_i` standard normal; event `>= 0`.
    ChiSq,
    /// `sum tau_i (eta_i - 1)`, `eta_i` unit exponential; event `>= 0`.
    Exp,
    /// `sum_{i<j} w_ij xi_i xi_j`, `xi_i` uniform signs; event `<= 0`.
    Bernoulli,
}

impl Kind {
    pub fn lemma(self) -> LemmaId {
        match self {
            Kind::ChiSq => LemmaId::L3_1,
            Kind::Exp => LemmaId::L3_4,
            Kind::Bernoulli => LemmaId::L4_1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Method {
    Exhaustive,
    MonteCarlo,
    ClosedForm,
}

/// Largest `n` enumerated exhaustively (`2^(n-1)` sign patterns).
pub const EXHAUSTIVE_MAX_N: usize = 20;

/// Samples per Monte Carlo shard; shard `s` uses stream `s` of the seed.
pub const SHARD_LEN: u64 = 1 << 16;

/// Shard lengths covering `samples`.
pub fn shard_layout(samples: u64) -> Vec<u64> {
    let full = samples / SHARD_LEN;
    let mut v: Vec<u64> = (0..full).map(|_| SHARD_LEN).collect();
    if samples % SHARD_LEN != 0 {
        v.push(samples % SHARD_LEN);
    }
    v
}

/// Event counts `(>= 0, <= 0)` of shard `shard` (with `len` samples).
/// `weights` are the `tau_i` or the packed pair weights.
pub fn shard_counts(kind: Kind, weights: &[f64], seed: u64, shard: u64, len: u64) -> (u64, u64) {
    let mut rng = stream(seed, shard);
    let (mut ge, mut le) = (0u64, 0u64);
    match kind {
        Kind::ChiSq | Kind::Exp => {
            for _ in 0..len {
                let mut s = 0.0;
                for &t in weights {
                    let e: f64 = match kind {
                        Kind::ChiSq => {
                            let z: f64 = rng.sample(StandardNormal);
                            z * z
                        }
                        _ => rng.sample(Exp1),
                    };
                    s += t * (e - 1.0);
                }
                ge += (s >= 0.0) as u64;
                le += (s <= 0.0) as u64;
            }
        }
        Kind::Bernoulli => {
            let w = PairWeights::from_packed(weights.to_vec()).expect("validated by caller");
            let n = w.n();
            let mut xi = alloc::vec![0.0; n];
            for _ in 0..len {
                for x in xi.iter_mut() {
                    *x = if rng.random::<bool>() { 1.0 } else { -1.0 };
                }
                let mut s = 0.0;
                for i in 0..n {
                    for j in (i + 1)..n {
                        s += w.get(i, j) * xi[i] * xi[j];
                    }
                }
                ge += (s >= 0.0) as u64;
                le += (s <= 0.0) as u64;
            }
        }
    }
    (ge, le)
}

/// Exact `(Prob{Psi >= 0}, Prob{Psi <= 0})` and the exact fourth moment by
/// Gray-code enumeration of sign vectors with `xi_0 = 1` (the sum is even
/// in `xi`). Values within `1e-12 sum|w|` of zero count for both tails.
pub fn enumerate_bernoulli(w: &PairWeights) -> Result<(f64, f64, f64), ProbError> {
    let n = w.n();
    if n > EXHAUSTIVE_MAX_N {
        return Err(ProbError::TooLarge {
            n,
            max: EXHAUSTIVE_MAX_N,
        });
    }
    let tol = 1e-12 * w.packed().iter().map(|v| v.abs()).sum::<f64>();
    let mut xi = alloc::vec![1.0f64; n];
    // s_k = sum_{j != k} w_kj xi_j
    let mut s: Vec<f64> = (0..n)
        .map(|k| (0..n).filter(|&j| j != k).map(|j| w.get(k, j)).sum())
        .collect();
    let mut psi: f64 = w.packed().iter().sum();
    let total = 1u64 << (n - 1);
    let (mut ge, mut le) = (0u64, 0u64);
    let mut m4 = 0.0;
    for step in 0..total {
        ge += (psi >= -tol) as u64;
        le += (psi <= tol) as u64;
        m4 += psi * psi * psi * psi;
        if step + 1 == total {
            break;
        }
        // Flip coordinate 1 + (index of lowest set bit of step + 1).
        let k = 1 + (step + 1).trailing_zeros() as usize;
        psi -= 2.0 * xi[k] * s[k];
        for j in 0..n {
            if j != k {
                s[j] -= 2.0 * w.get(j, k) * xi[k];
            }
        }
        xi[k] = -xi[k];
    }
    let t = total as f64;
    Ok((ge as f64 / t, le as f64 / t, m4 / t))
}

/// Splits packed pair weights for validation.
pub fn split_pairs(weights: &[f64]) -> Result<PairWeights, ProbError> {
    PairWeights::from_packed(weights.to_vec())
}

fn std_error(p: f64, n: u64) -> f64 {
    sqrt(p * (1.0 - p) / n as f64)
}

/// Combines shard counts into a result for `kind`.
pub fn finish_monte_carlo(kind: Kind, weights: &[f64], counts: &[(u64, u64)], samples: u64) -> AsymmetryResult {
    let (ge, le) = counts.iter().fold((0, 0), |(a, b), (c, d)| (a + c, b + d));
    let (hit, other) = match kind {
        Kind::Bernoulli => (le, ge),
        _ => (ge, le),
    };
    let p = hit as f64 / samples as f64;
    let q = other as f64 / samples as f64;
    let se = std_error(p, samples).max(std_error(q, samples));
    let _ = weights;
    AsymmetryResult {
        lemma_id: kind.lemma(),
        analytic_lower_bound: kind.lemma().constant().expect("constant lemma"),
        estimate: p,
        estimate_opposite: q,
        std_error: se,
        confidence_radius: 1.96 * se,
        method: Method::MonteCarlo,
        samples,
    }
}

fn validate(kind: Kind, weights: &[f64]) -> Result<(), ProbError> {
    if weights.iter().any(|v| !v.is_finite()) {
        return Err(ProbError::NonFinite);
    }
    if weights.iter().all(|v| *v == 0.0) {
        return Err(ProbError::Degenerate);
    }
    if kind == Kind::Bernoulli {
        split_pairs(weights)?;
    }
    Ok(())
}

/// Probability of the lemma event for `kind` by the requested method.
/// `samples` and `seed` are ignored by exact methods.
pub fn asym_prob(kind: Kind, weights: &[f64], method: Method, samples: u64, seed: u64) -> Result<AsymmetryResult, ProbError> {
    validate(kind, weights)?;
    let bound = kind.lemma().constant().expect("constant lemma");
    match method {
        Method::MonteCarlo => {
            if samples == 0 {
                return Err(ProbError::NoSamples);
            }
            let counts: Vec<(u64, u64)> = shard_layout(samples)
                .into_iter()
                .enumerate()
                .map(|(s, len)| shard_counts(kind, weights, seed, s as u64, len))
                .collect();
            Ok(finish_monte_carlo(kind, weights, &counts, samples))
        }
        Method::Exhaustive => {
            if kind != Kind::Bernoulli {
                return Err(ProbError::Unsupported(method, kind));
            }
            let w = split_pairs(weights)?;
            let (ge, le, _) = enumerate_bernoulli(&w)?;
            Ok(AsymmetryResult {
                lemma_id: LemmaId::L4_1,
                analytic_lower_bound: bound,
                estimate: le,
                estimate_opposite: ge,
                std_error: 0.0,
                confidence_radius: 0.0,
                method,
                samples: 1u64 << (w.n() - 1),
            })
        }
        Method::ClosedForm => {
            let (p, q) = match kind {
                Kind::Exp => {
                    let p = super::exp_closed_form(weights)?;
                    (p, 1.0 - p)
                }
                Kind::ChiSq if weights.len() == 1 => {
                    // Prob{eta^2 >= 1} = erfc(1 / sqrt 2).
                    let p = crate::math::erfc(1.0 / sqrt(2.0));
                    if weights[0] > 0.0 {
                        (p, 1.0 - p)
                    } else {
                        (1.0 - p, p)
                    }
                }
                _ => return Err(ProbError::Unsupported(method, kind)),
            };
            Ok(AsymmetryResult {
                lemma_id: kind.lemma(),
                analytic_lower_bound: bound,
                estimate: p,
                estimate_opposite: q,
                std_error: 0.0,
                confidence_radius: 0.0,
                method,
                samples: 0,
            })
        }
    }
}

/// Normalized fourth moment `E Phi^4` of the sum for `kind`.
pub(crate) fn normalized_moment4(kind: Kind, weights: &[f64]) -> Result<f64, ProbError> {
    validate(kind, weights)?;
    Ok(match kind {
        Kind::ChiSq => {
            let v: f64 = weights.iter().map(|t| 2.0 * t * t).sum();
            chi2_moment4(weights) / (v * v)
        }
        Kind::Exp => {
            let v: f64 = weights.iter().map(|t| t * t).sum();
            exp_moment4(weights) / (v * v)
        }
        Kind::Bernoulli => {
            let w = split_pairs(weights)?;
            let v = w.sum_sq();
            bernoulli_moment4(&w) / (v * v)
        }
    })
}

/// Data-dependent fourth-moment bound `(2 sqrt 3 - 3) / E Phi^4`.
pub fn sharpened_bound(kind: Kind, weights: &[f64]) -> Result<f64, ProbError> {
    asym_bound_moment(4.0, normalized_moment4(kind, weights)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_weight_tails() {
        let r = asym_prob(Kind::ChiSq, &[1.0], Method::ClosedForm, 0, 0).unwrap();
        assert!((r.estimate - 0.317_310_507_862_914).abs() < 1e-12);
        let r = asym_prob(Kind::Exp, &[1.0], Method::ClosedForm, 0, 0).unwrap();
        assert!((r.estimate - (-1f64).exp()).abs() < 1e-15);
        let r = asym_prob(Kind::Bernoulli, &[1.0], Method::Exhaustive, 0, 0).unwrap();
        assert_eq!(r.estimate, 0.5);
        assert_eq!(r.confidence_radius, 0.0);
    }

    #[test]
    fn monte_carlo_matches_closed_form() {
        let r = asym_prob(Kind::ChiSq, &[1.0], Method::MonteCarlo, 200_000, 3).unwrap();
        assert!((r.estimate - 0.317_310_507_862_914).abs() < 4.0 * r.std_error);
        let r = asym_prob(Kind::Exp, &[1.0], Method::MonteCarlo, 200_000, 3).unwrap();
        assert!((r.estimate - (-1f64).exp()).abs() < 4.0 * r.std_error);
    }

    #[test]
    fn shards_are_order_independent() {
        let w = [0.3, -1.0, 2.0];
        let a = asym_prob(Kind::ChiSq, &w, Method::MonteCarlo, 150_000, 9).unwrap();
        let mut counts: Vec<(u64, u64)> = shard_layout(150_000)
            .into_iter()
            .enumerate()
            .map(|(s, len)| shard_counts(Kind::ChiSq, &w, 9, s as u64, len))
            .collect();
        counts.reverse();
        assert_eq!(finish_monte_carlo(Kind::ChiSq, &w, &counts, 150_000), a);
    }

    #[test]
    fn enumeration_matches_moment() {
        let w = PairWeights::from_fn(6, |i, j| ((i * 7 + j * 3) % 5) as f64 - 2.0);
        let (_, le, m4) = enumerate_bernoulli(&w).unwrap();
        assert!((m4 - bernoulli_moment4(&w)).abs() <= 1e-10 * m4);
        assert!(le > 1.0 / 87.0);
        assert!(matches!(
            enumerate_bernoulli(&PairWeights::from_fn(21, |_, _| 1.0)),
            Err(ProbError::TooLarge { .. })
        ));
    }

    #[test]
    fn degenerate_weights() {
        assert_eq!(
            asym_prob(Kind::ChiSq, &[0.0, 0.0], Method::MonteCarlo, 10, 0),
            Err(ProbError::Degenerate)
        );
        assert_eq!(
            asym_prob(Kind::ChiSq, &[1.0; 2], Method::Exhaustive, 10, 0),
            Err(ProbError::Unsupported(Method::Exhaustive, Kind::ChiSq))
        );
    }

    #[test]
    fn sharpened_bounds_clear_constants() {
        assert!(sharpened_bound(Kind::ChiSq, &[1.0]).unwrap() >= 3.0 / 100.0);
        assert!(sharpened_bound(Kind::Exp, &[1.0]).unwrap() >= 1.0 / 20.0);
    }
}
