//! Exhaustive optimizer for tiny real instances.
//!
//! A homogeneous QCQP reduces to a search over directions: for a unit `d`,
//! the best multiple `r d` is determined in closed form by the values
//! `d^T A_k d` and `d^T C d`. The direction sphere (dimension `n - 1 <= 2`) is
//! scanned on a grid and the best cells are refined by repeated zooming.

use alloc::vec::Vec;

use crate::math::{cos, sin};
use crate::sdp::{Field, QcqpInstance, Sense};

#[derive(Debug, Clone, PartialEq)]
pub enum BruteForce {
    Optimal { value: f64, x: Vec<f64> },
    Unbounded,
    Infeasible,
}

impl BruteForce {
    pub fn value(&self) -> Option<f64> {
        match self {
            BruteForce::Optimal { value, .. } => Some(*value),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum BruteForceError {
    #[error("brute force supports real instances with n <= 3, got n = {0}")]
    Unsupported(usize),
    #[error("grid needs at least 4 points per angle")]
    GridTooCoarse,
}

const PI: f64 = core::f64::consts::PI;
const TOP: usize = 8;
const ZOOM_ROUNDS: usize = 40;
const ZOOM_POINTS: usize = 21;

enum DirValue {
    Value(f64, f64),
    Unbounded,
    Infeasible,
}

/// Best objective along direction `d`, and the squared radius achieving it.
fn along(inst: &QcqpInstance, d: &[f64]) -> DirValue {
    let c = inst.objective_at(d);
    let q = inst.constraint_values(d);
    match inst.sense() {
        Sense::Minimize => {
            let qmin = q.iter().cloned().fold(f64::INFINITY, f64::min);
            if qmin <= 0.0 {
                return DirValue::Infeasible;
            }
            if c < 0.0 {
                return DirValue::Unbounded;
            }
            DirValue::Value(c / qmin, 1.0 / qmin)
        }
        Sense::Maximize => {
            if c <= 0.0 {
                return DirValue::Value(0.0, 0.0);
            }
            let qmax = q.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            if qmax <= 0.0 {
                return DirValue::Unbounded;
            }
            DirValue::Value(c / qmax, 1.0 / qmax)
        }
    }
}

fn direction(n: usize, angles: &[f64]) -> Vec<f64> {
    match n {
        1 => alloc::vec![1.0],
        2 => alloc::vec![cos(angles[0]), sin(angles[0])],
        _ => alloc::vec![
            sin(angles[0]) * cos(angles[1]),
            sin(angles[0]) * sin(angles[1]),
            cos(angles[0]),
        ],
    }
}

/// Optimal value of a real instance with `n <= 3`, to grid-plus-zoom
/// resolution. `grid` is the number of points per angle of the initial scan.
pub fn brute_force_qcqp(inst: &QcqpInstance, grid: usize) -> Result<BruteForce, BruteForceError> {
    let n = inst.n();
    if inst.field() != Field::Real || n > 3 {
        return Err(BruteForceError::Unsupported(n));
    }
    if grid < 4 {
        return Err(BruteForceError::GridTooCoarse);
    }
    let better = |a: f64, b: f64| match inst.sense() {
        Sense::Minimize => a < b,
        Sense::Maximize => a > b,
    };
    // Angle ranges: n = 2 uses theta in [0, pi); n = 3 the full sphere.
    let ranges: Vec<(f64, f64)> = match n {
        1 => alloc::vec![],
        2 => alloc::vec![(0.0, PI)],
        _ => alloc::vec![(0.0, PI), (0.0, 2.0 * PI)],
    };

    let mut cells: Vec<(f64, Vec<f64>)> = Vec::new();
    let eval = |angles: Vec<f64>, cells: &mut Vec<(f64, Vec<f64>)>| -> bool {
        match along(inst, &direction(n, &angles)) {
            DirValue::Unbounded => return true,
            DirValue::Infeasible => {}
            DirValue::Value(v, _) => cells.push((v, angles)),
        }
        false
    };
    match n {
        1 => {
            if eval(alloc::vec![], &mut cells) {
                return Ok(BruteForce::Unbounded);
            }
        }
        2 => {
            for i in 0..grid {
                let t = PI * i as f64 / grid as f64;
                if eval(alloc::vec![t], &mut cells) {
                    return Ok(BruteForce::Unbounded);
                }
            }
        }
        _ => {
            for i in 0..=grid {
                for j in 0..(2 * grid) {
                    let t = PI * i as f64 / grid as f64;
                    let p = PI * j as f64 / grid as f64;
                    if eval(alloc::vec![t, p], &mut cells) {
                        return Ok(BruteForce::Unbounded);
                    }
                }
            }
        }
    }
    if cells.is_empty() {
        return Ok(BruteForce::Infeasible);
    }
    cells.sort_by(|a, b| {
        if better(a.0, b.0) {
            core::cmp::Ordering::Less
        } else if better(b.0, a.0) {
            core::cmp::Ordering::Greater
        } else {
            core::cmp::Ordering::Equal
        }
    });
    cells.truncate(TOP);

    let mut best_v = cells[0].0;
    let mut best_a = cells[0].1.clone();
    for (v0, a0) in cells {
        let (mut v, mut a) = (v0, a0);
        let mut h: Vec<f64> = ranges.iter().map(|(lo, hi)| (hi - lo) / grid as f64).collect();
        for _ in 0..ZOOM_ROUNDS {
            let center = a.clone();
            let steps = ZOOM_POINTS as isize / 2;
            let mut probe = |cand: Vec<f64>| {
                if let DirValue::Value(val, _) = along(inst, &direction(n, &cand)) {
                    if better(val, v) {
                        v = val;
                        a = cand;
                    }
                }
            };
            if n == 2 {
                for s in -steps..=steps {
                    probe(alloc::vec![center[0] + h[0] * s as f64 / steps as f64]);
                }
            } else if n == 3 {
                for s in -steps..=steps {
                    for t in -steps..=steps {
                        probe(alloc::vec![
                            center[0] + h[0] * s as f64 / steps as f64,
                            center[1] + h[1] * t as f64 / steps as f64,
                        ]);
                    }
                }
            }
            for hk in h.iter_mut() {
                *hk *= 0.5;
            }
        }
        if better(v, best_v) {
            best_v = v;
            best_a = a;
        }
    }
    let d = direction(n, &best_a);
    let r2 = match along(inst, &d) {
        DirValue::Value(_, r2) => r2,
        _ => 0.0,
    };
    let r = crate::math::sqrt(r2);
    Ok(BruteForce::Optimal {
        value: best_v,
        x: d.iter().map(|v| v * r).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instances::{canonical, ExampleId};
    use crate::linalg::SymMatrix;

    #[test]
    fn identity_min() {
        let inst = QcqpInstance::real(Sense::Minimize, SymMatrix::identity(2), alloc::vec![SymMatrix::identity(2)]).unwrap();
        let v = brute_force_qcqp(&inst, 64).unwrap().value().unwrap();
        assert!((v - 1.0).abs() < 1e-12);
    }

    #[test]
    fn example_4_4_value() {
        let ex = canonical(ExampleId::Example4_4, None);
        let res = brute_force_qcqp(&ex.instance, 360).unwrap();
        let v = res.value().unwrap();
        assert!((v - ex.known("v_qp").unwrap()).abs() < 1e-4, "{v}");
        if let BruteForce::Optimal { x, .. } = res {
            assert!(ex.instance.is_feasible(&x, 1e-9));
        }
    }

    #[test]
    fn example_4_3_below_bound() {
        for m in [10.0, 100.0] {
            let ex = canonical(ExampleId::Example4_3, Some(m));
            let v = brute_force_qcqp(&ex.instance, 720).unwrap().value().unwrap();
            assert!(v <= 2.618 / m + 1e-3, "{m}: {v}");
            assert!(v > 0.0);
        }
    }

    #[test]
    fn m_example_lower_bound() {
        let ex = canonical(ExampleId::MinMExample, Some(10.0));
        let v = brute_force_qcqp(&ex.instance, 720).unwrap().value().unwrap();
        assert!((v - ex.known("v_qp_lower").unwrap()).abs() < 1e-6, "{v}");
    }

    #[test]
    fn three_dimensional() {
        // min |x|^2 s.t. x^T diag(1, 2, 4) x >= 1: value 1/4.
        let inst = QcqpInstance::real(
            Sense::Minimize,
            SymMatrix::identity(3),
            alloc::vec![SymMatrix::from_diag(&[1.0, 2.0, 4.0])],
        )
        .unwrap();
        let v = brute_force_qcqp(&inst, 32).unwrap().value().unwrap();
        assert!((v - 0.25).abs() < 1e-9, "{v}");
    }

    #[test]
    fn detects_unbounded_and_unsupported() {
        let inst = QcqpInstance::real(
            Sense::Minimize,
            SymMatrix::from_diag(&[1.0, -1.0]),
            alloc::vec![SymMatrix::identity(2)],
        )
        .unwrap();
        assert_eq!(brute_force_qcqp(&inst, 64).unwrap(), BruteForce::Unbounded);
        let ex = canonical(ExampleId::Example3_7, None);
        assert_eq!(
            brute_force_qcqp(&ex.instance, 64),
            Err(BruteForceError::Unsupported(4))
        );
    }
}
