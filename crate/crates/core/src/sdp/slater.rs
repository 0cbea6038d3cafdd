//! Strict feasibility of the dual: is some nonnegative combination of the
//! constraint matrices definite?

use alloc::vec;
use alloc::vec::Vec;

use super::ipm::{solve_conic, ConicProblem, ConicStatus, IpmSettings};
use super::{QcqpInstance, SdpError, Sense};
use crate::linalg::{Mat, SymMatrix};

/// Margin above which the auxiliary optimum counts as strictly positive,
/// relative to `max(1, max_k ||A_k||_F)`.
pub const SLATER_TOL: f64 = 1e-9;

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Probe {
    /// `max t  s.t.  s * sum_k mu_k A_k >= t I,  sum mu = 1,  mu >= 0`.
    /// `None` when the auxiliary problem could not be solved.
    pub t: Option<f64>,
    pub multipliers: Vec<f64>,
    /// `Some(true)` only when the returned multipliers were re-verified to
    /// give a definite combination.
    pub holds: Option<bool>,
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SlaterReport {
    /// Some combination is positive definite.
    pub positive: Probe,
    /// Some combination is negative definite.
    pub negative: Probe,
    /// The sign this problem form asks for: positive definite for
    /// maximization, negative definite for minimization.
    pub dual_slater: Option<bool>,
}

fn probe(a: &[SymMatrix], sign: f64) -> Result<Probe, SdpError> {
    let n = a[0].n();
    let m = a.len() - 1;
    let p = m + 1;
    let l = if m == 0 { 0 } else { m + 1 };
    let last = a[m].scaled(sign);
    let mut mats: Vec<SymMatrix> = (0..m)
        .map(|k| last.sub(&a[k].scaled(sign)))
        .collect();
    mats.push(SymMatrix::identity(n));
    let mut b = vec![0.0; p];
    b[m] = 1.0;
    // Columns of G: mu_j >= 0 for j < m, then 1 - sum mu >= 0.
    let g = Mat::from_fn(p, l, |k, j| {
        if j < m {
            if k == j {
                -1.0
            } else {
                0.0
            }
        } else if k < m {
            1.0
        } else {
            0.0
        }
    });
    let mut f = vec![0.0; l];
    if l > 0 {
        f[m] = 1.0;
    }
    let prob = ConicProblem {
        c: last,
        a: mats,
        b,
        g,
        f,
    };
    let sol = solve_conic(&prob, &IpmSettings::default())?;
    if sol.status != ConicStatus::Optimal {
        return Ok(Probe {
            t: None,
            multipliers: vec![],
            holds: None,
        });
    }
    let mut mu: Vec<f64> = sol.y[..m].iter().map(|v| v.max(0.0)).collect();
    mu.push((1.0 - mu.iter().sum::<f64>()).max(0.0));
    let t = sol.y[m];

    let scale = a.iter().fold(1.0f64, |s, ak| s.max(ak.frobenius_norm()));
    let mut comb = SymMatrix::zeros(n);
    for (ak, &mk) in a.iter().zip(&mu) {
        comb.add_scaled(ak, sign * mk);
    }
    let verified = comb.min_eigenvalue()?;
    let holds = t > SLATER_TOL * scale && verified > 0.0;
    Ok(Probe {
        t: Some(t),
        multipliers: mu,
        holds: Some(holds),
    })
}

pub fn slater_check(inst: &QcqpInstance) -> Result<SlaterReport, SdpError> {
    let a = inst.constraints_work();
    let positive = probe(a, 1.0)?;
    let negative = probe(a, -1.0)?;
    let dual_slater = match inst.sense() {
        Sense::Maximize => positive.holds,
        Sense::Minimize => negative.holds,
    };
    Ok(SlaterReport {
        positive,
        negative,
        dual_slater,
    })
}
