//! Low-rank optimal solutions.
//!
//! An optimal `X = U U^T` of rank `r` is moved along `U D U^T` where the
//! symmetric `D` keeps every `Tr(A_k X)` fixed. Such `D` exists as soon as
//! the number of free parameters in `D` exceeds the number of constraints,
//! and stepping until `I + tD` becomes singular lowers the rank by one.
//! Complex solutions are handled in the real embedding with `D` restricted to
//! embeddings of Hermitian matrices, so the parameter count is `r^2`.

use alloc::vec;
use alloc::vec::Vec;

use rand_distr::StandardNormal;
use rand::Rng as _;

use crate::linalg::{LinalgError, Mat, SymMatrix};
use crate::math::sqrt;
use crate::rng::stream;
use crate::sdp::{symmetrize_complex, Field, QcqpInstance, SdpSolution, Sense, SolveStatus};

/// Eigenvalues below this fraction of the largest count as zero.
pub const RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RankError {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("rank reduction needs an optimal solution, got {0:?}")]
    NotOptimal(SolveStatus),
    #[error("solution is the zero matrix")]
    ZeroSolution,
}

#[derive(Debug, Clone)]
pub struct LowRankSolution {
    /// Working-space factor with `x = u u^T`. For complex instances this is
    /// `[B, JB]`, the embedding of an `n x r` complex factor.
    pub u: Mat,
    /// Rank over the instance's field.
    pub rank: usize,
    pub x: SymMatrix,
    pub objective_value: f64,
    /// Whether the rank bound for the constraint count was reached.
    pub bound_met: bool,
    pub steps: usize,
}

impl LowRankSolution {
    /// Complex `n x r` factor as `(Re, Im)`; `None` for real solutions.
    pub fn complex_factor(&self) -> Option<(Mat, Mat)> {
        if self.u.cols() != 2 * self.rank || self.u.rows() % 2 != 0 {
            return None;
        }
        let n = self.u.rows() / 2;
        let r = self.rank;
        let re = Mat::from_fn(n, r, |i, j| self.u[(i, j)]);
        let im = Mat::from_fn(n, r, |i, j| self.u[(n + i, j)]);
        Some((re, im))
    }
}

/// Largest rank the bound allows for `p` constraints.
pub fn rank_bound(p: usize, field: Field) -> usize {
    let mut r = 1;
    while params(r + 1, field) <= p {
        r += 1;
    }
    r
}

fn params(r: usize, field: Field) -> usize {
    match field {
        Field::Real => r * (r + 1) / 2,
        Field::Complex => r * r,
    }
}

/// `U` with `U U^T ~ X`, columns `sqrt(lambda_i) q_i` for eigenvalues above
/// `tol * lambda_max`.
pub fn factorize(x: &SymMatrix, tol: f64) -> Result<Mat, LinalgError> {
    let spec = x.eig()?;
    let top = spec.eigenvalues[0].max(0.0);
    let lo = *spec.eigenvalues.last().expect("n >= 1");
    if lo < -tol * top.max(1.0) {
        return Err(LinalgError::NotPsd { min_eigenvalue: lo });
    }
    let keep: Vec<usize> = (0..spec.n())
        .filter(|&k| spec.eigenvalues[k] > tol * top)
        .collect();
    let n = x.n();
    Ok(Mat::from_fn(n, keep.len(), |i, c| {
        let k = keep[c];
        sqrt(spec.eigenvalues[k]) * spec.eigenvectors[(i, k)]
    }))
}

/// `J v` with `J = [[0, -I], [I, 0]]`.
fn apply_j(v: &[f64]) -> Vec<f64> {
    let n = v.len() / 2;
    let mut out = vec![0.0; v.len()];
    for i in 0..n {
        out[i] = -v[n + i];
        out[n + i] = v[i];
    }
    out
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Factor `[B, JB]` of a Hermitian embedding, `B` of width `r`.
fn factorize_complex(x: &SymMatrix, tol: f64) -> Result<Mat, LinalgError> {
    let spec = x.eig()?;
    let top = spec.eigenvalues[0].max(0.0);
    let lo = *spec.eigenvalues.last().expect("n >= 1");
    if lo < -tol * top.max(1.0) {
        return Err(LinalgError::NotPsd { min_eigenvalue: lo });
    }
    let dim = x.n();
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut cols: Vec<Vec<f64>> = Vec::new();
    for k in 0..spec.n() {
        let lam = spec.eigenvalues[k];
        if lam <= tol * top {
            break;
        }
        let mut q = spec.eigenvector(k);
        // Twice for stability.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(b, &q);
                q.iter_mut().zip(b).for_each(|(qi, bi)| *qi -= c * bi);
            }
        }
        let nrm = sqrt(dot(&q, &q));
        if nrm < 0.5 {
            continue;
        }
        q.iter_mut().for_each(|v| *v /= nrm);
        let jq = apply_j(&q);
        cols.push(q.iter().map(|v| v * sqrt(lam)).collect());
        basis.push(q);
        basis.push(jq);
        if basis.len() >= dim {
            break;
        }
    }
    let r = cols.len();
    let mut all = cols.clone();
    all.extend(cols.iter().map(|c| apply_j(c)));
    let u = Mat::from_columns(dim, &all);
    debug_assert_eq!(u.cols(), 2 * r);
    Ok(u)
}

/// Symmetric (or Hermitian-embedding) `D` from a parameter vector. Real:
/// upper-triangle entries. Complex: symmetric part then antisymmetric part.
fn direction_from(params: &[f64], r: usize, field: Field) -> SymMatrix {
    match field {
        Field::Real => {
            let mut d = SymMatrix::zeros(r);
            let mut idx = 0;
            for i in 0..r {
                for j in i..r {
                    d.set(i, j, params[idx]);
                    idx += 1;
                }
            }
            d
        }
        Field::Complex => {
            let mut s = vec![0.0; r * r];
            let mut k = vec![0.0; r * r];
            let mut idx = 0;
            for i in 0..r {
                for j in i..r {
                    s[i * r + j] = params[idx];
                    s[j * r + i] = params[idx];
                    idx += 1;
                }
            }
            for i in 0..r {
                for j in (i + 1)..r {
                    k[i * r + j] = params[idx];
                    k[j * r + i] = -params[idx];
                    idx += 1;
                }
            }
            // [[S, -K], [K, S]]
            SymMatrix::from_fn(2 * r, |i, j| {
                let (bi, ii) = (i / r, i % r);
                let (bj, jj) = (j / r, j % r);
                match (bi, bj) {
                    (0, 0) | (1, 1) => s[ii * r + jj],
                    (0, 1) => -k[ii * r + jj],
                    _ => k[ii * r + jj],
                }
            })
        }
    }
}

/// Random unit vector orthogonal to the rows of `rows` (length `d` each).
/// `None` when the rows span everything.
fn null_vector(rows: &[Vec<f64>], d: usize, rng: &mut crate::rng::Rng) -> Option<Vec<f64>> {
    let mut ortho: Vec<Vec<f64>> = Vec::new();
    for row in rows {
        let scale = sqrt(dot(row, row));
        if scale == 0.0 {
            continue;
        }
        let mut v: Vec<f64> = row.iter().map(|x| x / scale).collect();
        for _ in 0..2 {
            for o in &ortho {
                let c = dot(o, &v);
                v.iter_mut().zip(o).for_each(|(vi, oi)| *vi -= c * oi);
            }
        }
        let nrm = sqrt(dot(&v, &v));
        if nrm > 1e-10 {
            v.iter_mut().for_each(|x| *x /= nrm);
            ortho.push(v);
        }
    }
    if ortho.len() >= d {
        return None;
    }
    for _ in 0..8 {
        let mut g: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for o in &ortho {
                let c = dot(o, &g);
                g.iter_mut().zip(o).for_each(|(gi, oi)| *gi -= c * oi);
            }
        }
        let nrm = sqrt(dot(&g, &g));
        if nrm > 1e-6 {
            g.iter_mut().for_each(|x| *x /= nrm);
            return Some(g);
        }
    }
    None
}

/// Reduces an optimal relaxation solution until `r(r+1)/2 <= p` (real) or
/// `r^2 <= p` (complex), `p` the number of constraints. Every constraint
/// value is kept; among the two step directions the one that does not worsen
/// the objective is taken.
pub fn reduce_rank(sol: &SdpSolution, inst: &QcqpInstance, seed: u64) -> Result<LowRankSolution, RankError> {
    if sol.status != SolveStatus::Optimal {
        return Err(RankError::NotOptimal(sol.status));
    }
    let field = inst.field();
    let p = inst.num_constraints();
    let mut rng = stream(seed, 0);
    let mut x = sol.x.clone();
    let mut steps = 0;
    loop {
        let u = match field {
            Field::Real => factorize(&x, RANK_TOL)?,
            Field::Complex => factorize_complex(&x, RANK_TOL)?,
        };
        let r = match field {
            Field::Real => u.cols(),
            Field::Complex => u.cols() / 2,
        };
        if r == 0 {
            return Err(RankError::ZeroSolution);
        }
        x = u.matmul_t(&u).to_sym();
        if field == Field::Complex {
            x = symmetrize_complex(&x);
        }
        let d = params(r, field);
        let done = |bound_met: bool, steps: usize, x: SymMatrix, u: Mat| {
            Ok(LowRankSolution {
                objective_value: inst.relaxed_objective(&x),
                u,
                rank: r,
                x,
                bound_met,
                steps,
            })
        };
        if d <= p {
            return done(true, steps, x, u);
        }
        // Row k: coefficients of <U^T A_k U, D> in the parameters of D.
        let reduced: Vec<SymMatrix> = inst.constraints_work().iter().map(|a| a.congruence(&u)).collect();
        let c_red = inst.objective_work().congruence(&u);
        let unit = |t: usize| {
            let mut e = vec![0.0; d];
            e[t] = 1.0;
            direction_from(&e, r, field)
        };
        let basis: Vec<SymMatrix> = (0..d).map(unit).collect();
        let rows: Vec<Vec<f64>> = reduced
            .iter()
            .map(|ak| basis.iter().map(|e| ak.inner(e)).collect())
            .collect();
        let Some(v) = null_vector(&rows, d, &mut rng) else {
            return done(false, steps, x, u);
        };
        let dir = direction_from(&v, r, field);
        let ev = dir.eig()?.eigenvalues;
        let (hi, lo) = (ev[0], *ev.last().expect("r >= 1"));
        let slope = c_red.inner(&dir);
        let improving = |t: f64| match inst.sense() {
            Sense::Minimize => t * slope <= 0.0,
            Sense::Maximize => t * slope >= 0.0,
        };
        let mut candidates: Vec<f64> = Vec::new();
        if lo < 0.0 {
            candidates.push(-1.0 / lo);
        }
        if hi > 0.0 {
            candidates.push(-1.0 / hi);
        }
        let t = match candidates.iter().find(|&&t| improving(t)).or(candidates.first()) {
            Some(&t) => t,
            None => return done(false, steps, x, u),
        };
        let mut w = SymMatrix::identity(dir.n());
        w.add_scaled(&dir, t);
        // Clip the eigenvalue that the step annihilates.
        let w = w.eig()?.reconstruct_with(|l| l.max(0.0));
        x = w.congruence_t(&u);
        if field == Field::Complex {
            x = symmetrize_complex(&x);
        }
        steps += 1;
        if steps > 4 * sol.x.n() {
            let u = match field {
                Field::Real => factorize(&x, RANK_TOL)?,
                Field::Complex => factorize_complex(&x, RANK_TOL)?,
            };
            let r_now = match field {
                Field::Real => u.cols(),
                Field::Complex => u.cols() / 2,
            };
            return Ok(LowRankSolution {
                objective_value: inst.relaxed_objective(&x),
                bound_met: params(r_now, field) <= p,
                rank: r_now,
                u,
                x,
                steps,
            });
        }
    }
}

trait ToSym {
    fn to_sym(&self) -> SymMatrix;
}

impl ToSym for Mat {
    fn to_sym(&self) -> SymMatrix {
        SymMatrix::from_fn(self.rows(), |i, j| 0.5 * (self[(i, j)] + self[(j, i)]))
    }
}
