use alloc::vec::Vec;

use super::{LinalgError, Mat, SymMatrix};
use crate::math::{hypot, sqrt};

const MAX_SWEEPS: usize = 100;
/// Accepted off-diagonal mass, relative to `||M||_F`, if the sweep cap is hit.
const OFFDIAG_TOL: f64 = 1e-12;
/// Rotations are skipped once `|a_pq|` is negligible next to both diagonal
/// entries; this keeps small eigenvalues accurate to working precision.
const SKIP_REL: f64 = 1e-15;

/// Eigen-decomposition `M = Q diag(eigenvalues) Q^T`.
#[derive(Debug, Clone)]
pub struct Spectrum {
    /// Sorted descending.
    pub eigenvalues: Vec<f64>,
    /// Orthogonal, eigenvectors in columns.
    pub eigenvectors: Mat,
}

impl Spectrum {
    pub fn n(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn eigenvector(&self, k: usize) -> Vec<f64> {
        self.eigenvectors.column(k)
    }

    /// `Q diag(f(lambda)) Q^T`.
    pub fn reconstruct_with(&self, mut f: impl FnMut(f64) -> f64) -> SymMatrix {
        let n = self.n();
        let q = &self.eigenvectors;
        let w: Vec<f64> = self.eigenvalues.iter().map(|&l| f(l)).collect();
        SymMatrix::from_fn(n, |i, j| (0..n).map(|k| q[(i, k)] * w[k] * q[(j, k)]).sum())
    }

    pub fn reconstruct(&self) -> SymMatrix {
        self.reconstruct_with(|l| l)
    }
}

/// Cyclic Jacobi eigen-decomposition.
pub fn sym_eig(m: &SymMatrix) -> Result<Spectrum, LinalgError> {
    let n = m.n();
    let mut a = m.as_slice().to_vec();
    let mut v = Mat::identity(n);
    let norm = m.frobenius_norm();

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                s += 2.0 * a[i * n + j] * a[i * n + j];
            }
        }
        sqrt(s)
    };

    let mut converged = norm == 0.0;
    let mut sweeps = 0;
    while !converged && sweeps < MAX_SWEEPS {
        sweeps += 1;
        let mut rotated = false;
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq == 0.0 {
                    continue;
                }
                let app = a[p * n + p];
                let aqq = a[q * n + q];
                if apq.abs() <= SKIP_REL * sqrt((app * aqq).abs())
                    || apq.abs() <= f64::MIN_POSITIVE * norm
                {
                    continue;
                }
                rotated = true;
                let theta = (aqq - app) / (2.0 * apq);
                let t = if theta.abs() > 1e150 {
                    0.5 / theta
                } else {
                    let sgn = if theta >= 0.0 { 1.0 } else { -1.0 };
                    sgn / (theta.abs() + hypot(1.0, theta))
                };
                let c = 1.0 / hypot(1.0, t);
                let s = t * c;
                for k in 0..n {
                    if k == p || k == q {
                        continue;
                    }
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    let nkp = c * akp - s * akq;
                    let nkq = s * akp + c * akq;
                    a[k * n + p] = nkp;
                    a[p * n + k] = nkp;
                    a[k * n + q] = nkq;
                    a[q * n + k] = nkq;
                }
                a[p * n + p] = app - t * apq;
                a[q * n + q] = aqq + t * apq;
                a[p * n + q] = 0.0;
                a[q * n + p] = 0.0;
                for k in 0..n {
                    let vkp = v[(k, p)];
                    let vkq = v[(k, q)];
                    v[(k, p)] = c * vkp - s * vkq;
                    v[(k, q)] = s * vkp + c * vkq;
                }
            }
        }
        if !rotated {
            converged = true;
        }
    }
    if !converged {
        let residual = off(&a);
        if residual > OFFDIAG_TOL * norm {
            return Err(LinalgError::NoConvergence { sweeps, residual });
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[j * n + j].total_cmp(&a[i * n + i]));
    let eigenvalues = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors = Mat::from_fn(n, n, |i, k| v[(i, order[k])]);
    Ok(Spectrum {
        eigenvalues,
        eigenvectors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn check(m: &SymMatrix) -> Spectrum {
        let s = sym_eig(m).unwrap();
        let err = s.reconstruct().sub(m).frobenius_norm();
        assert!(err <= 1e-10 * (1.0 + m.frobenius_norm()), "reconstruction {err}");
        let qtq = s.eigenvectors.t_matmul(&s.eigenvectors);
        assert!(qtq.sub(&Mat::identity(m.n())).max_abs() <= 1e-10);
        for w in s.eigenvalues.windows(2) {
            assert!(w[0] >= w[1]);
        }
        s
    }

    #[test]
    fn diagonal_input() {
        let s = check(&SymMatrix::from_diag(&[3.0, 1.0]));
        assert_eq!(s.eigenvalues, vec![3.0, 1.0]);
        assert_eq!(s.eigenvectors, Mat::identity(2));
    }

    #[test]
    fn swap_matrix() {
        let s = check(&SymMatrix::new(2, vec![0.0, 1.0, 1.0, 0.0]).unwrap());
        assert!((s.eigenvalues[0] - 1.0).abs() < 1e-15);
        assert!((s.eigenvalues[1] + 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_and_scalar() {
        let s = check(&SymMatrix::zeros(3));
        assert_eq!(s.eigenvalues, vec![0.0; 3]);
        check(&SymMatrix::identity(4).scaled(1e-300));
    }

    #[test]
    fn deterministic_dense() {
        let m = SymMatrix::from_fn(8, |i, j| {
            let x = (i * 31 + j * 17 + i * j) as f64;
            (x * 0.37).sin() * 3.0 + if i == j { 0.5 } else { 0.0 }
        });
        let s = check(&m);
        let trace: f64 = s.eigenvalues.iter().sum();
        assert!((trace - m.trace()).abs() < 1e-12);
    }

    #[test]
    fn graded_matrix_keeps_small_eigenvalue() {
        // Hilbert-like, eigenvalues span many orders of magnitude.
        let m = SymMatrix::from_fn(6, |i, j| 1.0 / ((i + j + 1) as f64));
        let s = check(&m);
        assert!(s.eigenvalues[5] > 0.0);
        assert!((s.eigenvalues[5] - 1.08279948e-7).abs() < 1e-14);
    }
}
