use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;

use super::{asym_prob, Kind, Method, ProbError};
use crate::math::exp;
use crate::rng::{derive_seed, label, stream};

/// Minimum gap between normalized weights accepted by [`exp_closed_form`].
pub const CLOSED_FORM_GAP: f64 = 1e-6;

/// `Prob{sum tau_i (eta_i - 1) >= 0}` for unit exponentials `eta_i` and
/// distinct positive `tau_i`:
/// `sum_i exp(-1/tau_i) / prod_{j != i} (1 - tau_j / tau_i)` with the
/// weights first scaled to sum to one (the probability is scale-free).
pub fn exp_closed_form(taus: &[f64]) -> Result<f64, ProbError> {
    if taus.is_empty() {
        return Err(ProbError::Degenerate);
    }
    if taus.iter().any(|t| !t.is_finite()) {
        return Err(ProbError::NonFinite);
    }
    if taus.iter().any(|&t| t <= 0.0) {
        return Err(ProbError::NonPositive);
    }
    let total: f64 = taus.iter().sum();
    let t: Vec<f64> = taus.iter().map(|v| v / total).collect();
    for i in 0..t.len() {
        for j in (i + 1)..t.len() {
            if (t[i] - t[j]).abs() < CLOSED_FORM_GAP {
                return Err(ProbError::IllConditioned(i, j));
            }
        }
    }
    let mut s = 0.0;
    for i in 0..t.len() {
        let mut den = 1.0;
        for j in 0..t.len() {
            if j != i {
                den *= 1.0 - t[j] / t[i];
            }
        }
        s += exp(-1.0 / t[i]) / den;
    }
    Ok(s)
}

/// Limit of the closed form when all `n` weights coincide: the Erlang-`n`
/// tail at its mean, `e^-n sum_{k<n} n^k / k!`.
pub fn erlang_tail(n: usize) -> f64 {
    let nf = n as f64;
    let mut term = 1.0;
    let mut s = 0.0;
    for k in 0..n {
        if k > 0 {
            term *= nf / k as f64;
        }
        s += term;
    }
    exp(-nf) * s
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConjectureScan {
    pub n: usize,
    pub min_found: f64,
    pub argmin: Vec<f64>,
    pub max_found: f64,
    pub argmax: Vec<f64>,
    pub points: usize,
    /// Grid points too close to coincident weights for the formula.
    pub skipped: usize,
    /// Monte Carlo extremes over random mixed-sign weights, if requested.
    pub mixed_min: Option<f64>,
    pub mixed_max: Option<f64>,
    pub mixed_std_error: Option<f64>,
}

/// Scans the closed form over the positive simplex (`n` in `{2, 3}`) on a
/// grid of step `resolution`, and optionally estimates the probability for
/// `mixed.0` random mixed-sign weight vectors with `mixed.1` samples each.
pub fn conjecture_scan(n: usize, resolution: f64, mixed: Option<(usize, u64, u64)>) -> Result<ConjectureScan, ProbError> {
    assert!(n == 2 || n == 3, "scan supports n = 2, 3");
    assert!(resolution > 0.0 && resolution < 0.5, "resolution must lie in (0, 1/2)");
    let steps = libm::round(1.0 / resolution) as usize;
    let h = 1.0 / steps as f64;
    let mut best = (f64::INFINITY, Vec::new());
    let mut worst = (f64::NEG_INFINITY, Vec::new());
    let (mut points, mut skipped) = (0, 0);
    let mut visit = |t: Vec<f64>| match exp_closed_form(&t) {
        Ok(v) => {
            points += 1;
            if v < best.0 {
                best = (v, t.clone());
            }
            if v > worst.0 {
                worst = (v, t);
            }
        }
        Err(_) => skipped += 1,
    };
    if n == 2 {
        for i in 1..steps {
            let a = i as f64 * h;
            visit(vec![a, 1.0 - a]);
        }
    } else {
        for i in 1..steps {
            for j in 1..(steps - i) {
                let (a, b) = (i as f64 * h, j as f64 * h);
                visit(vec![a, b, 1.0 - a - b]);
            }
        }
    }
    // The coincident point is covered by its continuous extension.
    let eq = erlang_tail(n);
    let centre = vec![1.0 / n as f64; n];
    if eq < best.0 {
        best = (eq, centre.clone());
    }
    if eq > worst.0 {
        worst = (eq, centre);
    }
    let (mut mixed_min, mut mixed_max, mut mixed_se) = (None, None, None);
    if let Some((count, samples, seed)) = mixed {
        let (mut lo, mut hi, mut se) = (f64::INFINITY, f64::NEG_INFINITY, 0.0f64);
        for c in 0..count {
            let mut rng = stream(derive_seed(seed, label("mixed-weights"), c as u64), 0);
            let mut t: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 0.01).collect();
            // At least one weight of each sign.
            t[0] = -t[0];
            if n == 3 && rng.random::<bool>() {
                t[1] = -t[1];
            }
            let r = asym_prob(Kind::Exp, &t, Method::MonteCarlo, samples, derive_seed(seed, label("mixed-mc"), c as u64))?;
            lo = lo.min(r.estimate);
            hi = hi.max(r.estimate);
            se = se.max(r.std_error);
        }
        if count > 0 {
            mixed_min = Some(lo);
            mixed_max = Some(hi);
            mixed_se = Some(se);
        }
    }
    Ok(ConjectureScan {
        n,
        min_found: best.0,
        argmin: best.1,
        max_found: worst.0,
        argmax: worst.1,
        points,
        skipped,
        mixed_min,
        mixed_max,
        mixed_std_error: mixed_se,
    })
}
