//! Homogeneous self-dual interior-point method for one PSD block plus an
//! optional nonnegative (LP) block:
//!
//! ```text
//! primal:  min <C,X> + f'u   s.t.  <A_k,X> + (G u)_k = b_k,  X >= 0, u >= 0
//! dual:    max b'y           s.t.  C - sum_k y_k A_k = Z >= 0,  f - G'y = w >= 0
//! ```
//!
//! Nesterov-Todd scaling, Mehrotra predictor-corrector.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{sym_eig, Cholesky, LinalgError, Mat, SymMatrix};
use crate::math::sqrt;

#[derive(Debug, Clone)]
pub struct ConicProblem {
    pub c: SymMatrix,
    pub a: Vec<SymMatrix>,
    pub b: Vec<f64>,
    /// `p x l`, zero columns when there is no LP block.
    pub g: Mat,
    pub f: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmSettings {
    pub max_iter: usize,
    pub step_fraction: f64,
    pub gap_tol: f64,
    pub feas_tol: f64,
    pub infeas_tol: f64,
    /// Residual and gap level accepted as optimal when `max_iter` is hit.
    pub fallback_tol: f64,
}

impl Default for IpmSettings {
    fn default() -> Self {
        Self {
            max_iter: 200,
            step_fraction: 0.98,
            gap_tol: 1e-8,
            feas_tol: 1e-9,
            infeas_tol: 1e-8,
            fallback_tol: 1e-7,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConicStatus {
    Optimal,
    /// `y, Z, w` hold a normalized dual ray: `b'y = 1`, `A*y + Z = 0`, `G'y + w = 0`.
    PrimalInfeasible,
    /// `X, u` hold a normalized primal ray: `<C,X> + f'u = -1`, `A(X) + Gu = 0`.
    DualInfeasible,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct ConicSolution {
    pub status: ConicStatus,
    pub x: SymMatrix,
    pub u: Vec<f64>,
    pub y: Vec<f64>,
    pub z: SymMatrix,
    pub w: Vec<f64>,
    pub primal_objective: f64,
    pub dual_objective: f64,
    /// `||A(X) + Gu - b||_inf / (1 + ||b||_inf)`.
    pub primal_residual: f64,
    /// `(||C - A*y - Z||_F + ||f - G'y - w||) / (1 + ||C||_F + ||f||)`.
    pub dual_residual: f64,
    /// `|p - d| / (1 + |p| + |d|)`.
    pub gap: f64,
    pub iterations: usize,
}

/// Iterations without improvement tolerated once the best iterate is within
/// the fallback tolerance.
const STALL_WINDOW: usize = 20;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    sqrt(dot(a, a))
}

fn sq(x: f64) -> f64 {
    x * x
}

fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

impl ConicProblem {
    pub fn p(&self) -> usize {
        self.a.len()
    }

    pub fn n(&self) -> usize {
        self.c.n()
    }

    pub fn l(&self) -> usize {
        self.f.len()
    }

    fn check(&self) -> Result<(), LinalgError> {
        let n = self.n();
        for a in &self.a {
            if a.n() != n {
                return Err(LinalgError::DimensionMismatch {
                    expected: n,
                    got: a.n(),
                });
            }
        }
        if self.b.len() != self.p() || self.g.rows() != self.p() || self.g.cols() != self.l() {
            return Err(LinalgError::DimensionMismatch {
                expected: self.p(),
                got: self.b.len(),
            });
        }
        Ok(())
    }

    /// `A(X)`.
    pub fn apply(&self, x: &SymMatrix) -> Vec<f64> {
        self.a.iter().map(|a| a.inner(x)).collect()
    }

    /// `A*(y) = sum_k y_k A_k`.
    pub fn adjoint(&self, y: &[f64]) -> SymMatrix {
        let mut out = SymMatrix::zeros(self.n());
        for (a, &yk) in self.a.iter().zip(y) {
            if yk != 0.0 {
                out.add_scaled(a, yk);
            }
        }
        out
    }

    fn primal_measures(&self, x: &SymMatrix, u: &[f64]) -> Vec<f64> {
        let mut r = self.apply(x);
        let gu = self.g.mul_vec(u);
        for (k, v) in r.iter_mut().enumerate() {
            *v += gu[k] - self.b[k];
        }
        r
    }

    /// Residuals and objectives of a candidate point in this problem's scale.
    fn evaluate(
        &self,
        x: &SymMatrix,
        u: &[f64],
        y: &[f64],
        z: &SymMatrix,
        w: &[f64],
    ) -> (f64, f64, f64, f64, f64) {
        let rp = self.primal_measures(x, u);
        let pres = norm_inf(&rp) / (1.0 + norm_inf(&self.b));
        let rd = self.c.sub(&self.adjoint(y)).sub(z);
        let gty = self.g.t_mul_vec(y);
        let rf: Vec<f64> = (0..self.l()).map(|j| self.f[j] - gty[j] - w[j]).collect();
        let dres = (rd.frobenius_norm() + norm2(&rf))
            / (1.0 + self.c.frobenius_norm() + norm2(&self.f));
        let pobj = self.c.inner(x) + dot(&self.f, u);
        let dobj = dot(&self.b, y);
        let gap = (pobj - dobj).abs() / (1.0 + pobj.abs() + dobj.abs());
        (pres, dres, gap, pobj, dobj)
    }
}

/// Row and objective scaling applied before iterating.
struct Scaling {
    row: Vec<f64>,
    obj: f64,
}

fn scale_problem(prob: &ConicProblem) -> (ConicProblem, Scaling) {
    let row: Vec<f64> = (0..prob.p())
        .map(|k| {
            let gk: f64 = prob.g.row(k).iter().map(|x| x * x).sum();
            let nrm = sqrt(sq(prob.a[k].frobenius_norm()) + gk);
            if nrm > 0.0 {
                1.0 / nrm
            } else {
                1.0
            }
        })
        .collect();
    let cn = sqrt(sq(prob.c.frobenius_norm()) + dot(&prob.f, &prob.f));
    let obj = if cn > 0.0 { 1.0 / cn } else { 1.0 };
    let scaled = ConicProblem {
        c: prob.c.scaled(obj),
        a: prob.a.iter().zip(&row).map(|(a, s)| a.scaled(*s)).collect(),
        b: prob.b.iter().zip(&row).map(|(b, s)| b * s).collect(),
        g: Mat::from_fn(prob.g.rows(), prob.g.cols(), |i, j| prob.g[(i, j)] * row[i]),
        f: prob.f.iter().map(|v| v * obj).collect(),
    };
    (scaled, Scaling { row, obj })
}

#[derive(Clone)]
struct Iterate {
    x: SymMatrix,
    u: Vec<f64>,
    y: Vec<f64>,
    z: SymMatrix,
    w: Vec<f64>,
    tau: f64,
    kappa: f64,
}

struct Direction {
    dx: SymMatrix,
    du: Vec<f64>,
    dy: Vec<f64>,
    dz: SymMatrix,
    dw: Vec<f64>,
    dtau: f64,
    dkappa: f64,
    /// Scaled directions, `R^{-1} dX R^{-T}` and `R^T dZ R`.
    sx: SymMatrix,
    sz: SymMatrix,
}

impl Direction {
    fn is_finite(&self) -> bool {
        let fin = |v: &[f64]| v.iter().all(|x| x.is_finite());
        fin(self.dx.as_slice())
            && fin(self.dz.as_slice())
            && fin(&self.du)
            && fin(&self.dy)
            && fin(&self.dw)
            && self.dtau.is_finite()
            && self.dkappa.is_finite()
    }
}

struct Residuals {
    rp: Vec<f64>,
    rd: SymMatrix,
    rf: Vec<f64>,
    rg: f64,
}

/// Quantities fixed for one iteration: NT scaling and the reduced system.
struct Newton<'a> {
    prob: &'a ConicProblem,
    r: Mat,
    lambda: Vec<f64>,
    bk: Vec<SymMatrix>,
    bc: SymMatrix,
    rd_s: SymMatrix,
    d: Vec<f64>,
    chol: Cholesky,
    h: Vec<f64>,
    d0: f64,
    v2: Vec<f64>,
}

impl<'a> Newton<'a> {
    fn new(prob: &'a ConicProblem, it: &Iterate, res: &Residuals) -> Result<Self, LinalgError> {
        let n = prob.n();
        let p = prob.p();
        let l = prob.l();

        let ex = sym_eig(&it.x)?;
        if ex.eigenvalues[n - 1] <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite {
                index: n - 1,
                pivot: ex.eigenvalues[n - 1],
            });
        }
        let xh = {
            let s: Vec<f64> = ex.eigenvalues.iter().map(|v| sqrt(*v)).collect();
            let q = &ex.eigenvectors;
            Mat::from_fn(n, n, |i, j| (0..n).map(|k| q[(i, k)] * s[k] * q[(j, k)]).sum())
        };
        let k = it.z.congruence(&xh);
        let ek = sym_eig(&k)?;
        if ek.eigenvalues[n - 1] <= 0.0 {
            return Err(LinalgError::NotPositiveDefinite {
                index: n - 1,
                pivot: ek.eigenvalues[n - 1],
            });
        }
        let q4: Vec<f64> = ek
            .eigenvalues
            .iter()
            .map(|v| 1.0 / sqrt(sqrt(*v)))
            .collect();
        let sk = Mat::from_fn(n, n, |i, j| ek.eigenvectors[(i, j)] * q4[j]);
        let r = xh.matmul(&sk);
        let lambda: Vec<f64> = ek.eigenvalues.iter().map(|v| sqrt(*v)).collect();

        let bk: Vec<SymMatrix> = prob.a.iter().map(|a| a.congruence(&r)).collect();
        let bc = prob.c.congruence(&r);
        let rd_s = res.rd.congruence(&r);
        let d: Vec<f64> = (0..l).map(|j| it.u[j] / it.w[j]).collect();

        let mut hm = Mat::zeros(p, p);
        for i in 0..p {
            for j in 0..=i {
                let mut v = bk[i].inner(&bk[j]);
                for t in 0..l {
                    v += prob.g[(i, t)] * d[t] * prob.g[(j, t)];
                }
                hm[(i, j)] = v;
                hm[(j, i)] = v;
            }
        }
        let chol = match Cholesky::new(&hm) {
            Ok(c) => c,
            Err(_) => {
                let diag_max = (0..p).fold(0.0f64, |m, i| m.max(hm[(i, i)]));
                let mut reg = 1e-14 * diag_max.max(1e-300);
                loop {
                    let mut hr = hm.clone();
                    for i in 0..p {
                        hr[(i, i)] += reg;
                    }
                    match Cholesky::new(&hr) {
                        Ok(c) => break c,
                        Err(e) if reg > 1e-4 * diag_max.max(1.0) => return Err(e),
                        Err(_) => reg *= 100.0,
                    }
                }
            }
        };
        let gdf: Vec<f64> = {
            let df: Vec<f64> = (0..l).map(|j| d[j] * prob.f[j]).collect();
            prob.g.mul_vec(&df)
        };
        let h: Vec<f64> = (0..p).map(|i| bk[i].inner(&bc) + gdf[i]).collect();
        let d0 = bc.inner(&bc) + (0..l).map(|j| prob.f[j] * d[j] * prob.f[j]).sum::<f64>();
        let hb: Vec<f64> = (0..p).map(|i| h[i] + prob.b[i]).collect();
        let v2 = chol.solve(&hb);
        Ok(Self {
            prob,
            r,
            lambda,
            bk,
            bc,
            rd_s,
            d,
            chol,
            h,
            d0,
            v2,
        })
    }

    /// Solves the Newton system for residual weight `eta`, scaled
    /// complementarity right-hand side `t` (already divided through by the
    /// Jordan product with Lambda), LP target `rho_u` and `rho_tau`.
    fn solve(
        &self,
        it: &Iterate,
        res: &Residuals,
        eta: f64,
        t: &SymMatrix,
        rho_u: &[f64],
        rho_tau: f64,
    ) -> Direction {
        let prob = self.prob;
        let p = prob.p();
        let l = prob.l();
        let rho_w: Vec<f64> = (0..l).map(|j| rho_u[j] / it.w[j]).collect();
        let drf: Vec<f64> = (0..l).map(|j| self.d[j] * res.rf[j]).collect();
        let g_rho = prob.g.mul_vec(&rho_w);
        let g_drf = prob.g.mul_vec(&drf);

        let r1: Vec<f64> = (0..p)
            .map(|k| {
                eta * res.rp[k] - self.bk[k].inner(t) + eta * self.bk[k].inner(&self.rd_s) - g_rho[k]
                    + eta * g_drf[k]
            })
            .collect();
        let cst = self.bc.inner(t) - eta * self.bc.inner(&self.rd_s) + dot(&prob.f, &rho_w)
            - eta * dot(&prob.f, &drf);
        let r2 = eta * res.rg - cst - rho_tau / it.tau;

        let v1 = self.chol.solve(&r1);
        let hb: Vec<f64> = (0..p).map(|k| self.h[k] - prob.b[k]).collect();
        // The Schur complement is positive in exact arithmetic but cancels
        // near the optimum.
        let denom = (self.d0 + it.kappa / it.tau - dot(&hb, &self.v2))
            .max(it.kappa / it.tau + 1e-14 * self.d0)
            .max(f64::MIN_POSITIVE);
        let dtau = (dot(&hb, &v1) - r2) / denom;
        let dy: Vec<f64> = (0..p).map(|k| v1[k] + self.v2[k] * dtau).collect();

        let mut sz = self.rd_s.scaled(eta);
        sz.add_scaled(&self.bc, dtau);
        for (bk, &dyk) in self.bk.iter().zip(&dy) {
            sz.add_scaled(bk, -dyk);
        }
        let sx = t.sub(&sz);
        let dx = sx.congruence_t(&self.r);
        let mut dz = res.rd.scaled(eta);
        dz.add_scaled(&prob.c, dtau);
        dz.add_scaled(&prob.adjoint(&dy), -1.0);

        let gty = prob.g.t_mul_vec(&dy);
        let dw: Vec<f64> = (0..l)
            .map(|j| eta * res.rf[j] + prob.f[j] * dtau - gty[j])
            .collect();
        let du: Vec<f64> = (0..l).map(|j| rho_w[j] - self.d[j] * dw[j]).collect();
        let dkappa = (rho_tau - it.kappa * dtau) / it.tau;
        Direction {
            dx,
            du,
            dy,
            dz,
            dw,
            dtau,
            dkappa,
            sx,
            sz,
        }
    }

    /// Largest step keeping every cone variable nonnegative.
    fn max_step(&self, it: &Iterate, dir: &Direction) -> Result<f64, LinalgError> {
        let mut alpha = f64::INFINITY;
        let inv_sqrt: Vec<f64> = self.lambda.iter().map(|v| 1.0 / sqrt(*v)).collect();
        for s in [&dir.sx, &dir.sz] {
            let m = SymMatrix::from_fn(s.n(), |i, j| s.get(i, j) * inv_sqrt[i] * inv_sqrt[j]);
            let lo = *sym_eig(&m)?.eigenvalues.last().expect("n >= 1");
            if lo < 0.0 {
                alpha = alpha.min(-1.0 / lo);
            }
        }
        let ratio = |v: f64, dv: f64, a: &mut f64| {
            if dv < 0.0 {
                *a = a.min(-v / dv);
            }
        };
        for j in 0..it.u.len() {
            ratio(it.u[j], dir.du[j], &mut alpha);
            ratio(it.w[j], dir.dw[j], &mut alpha);
        }
        ratio(it.tau, dir.dtau, &mut alpha);
        ratio(it.kappa, dir.dkappa, &mut alpha);
        Ok(alpha)
    }
}

fn residuals(prob: &ConicProblem, it: &Iterate) -> Residuals {
    let ax = prob.apply(&it.x);
    let gu = prob.g.mul_vec(&it.u);
    let rp: Vec<f64> = (0..prob.p())
        .map(|k| prob.b[k] * it.tau - ax[k] - gu[k])
        .collect();
    let mut rd = prob.c.scaled(it.tau);
    rd.add_scaled(&prob.adjoint(&it.y), -1.0);
    rd.add_scaled(&it.z, -1.0);
    let gty = prob.g.t_mul_vec(&it.y);
    let rf: Vec<f64> = (0..prob.l())
        .map(|j| prob.f[j] * it.tau - gty[j] - it.w[j])
        .collect();
    let rg = dot(&prob.b, &it.y) - prob.c.inner(&it.x) - dot(&prob.f, &it.u) - it.kappa;
    Residuals { rp, rd, rf, rg }
}

fn mu(it: &Iterate, nu: f64) -> f64 {
    (it.x.inner(&it.z) + dot(&it.u, &it.w) + it.tau * it.kappa) / nu
}

/// Solves `prob` from the standard cold start `X = Z = I`, `u = w = 1`.
pub fn solve_conic(prob: &ConicProblem, settings: &IpmSettings) -> Result<ConicSolution, LinalgError> {
    prob.check()?;
    let (sp, scaling) = scale_problem(prob);
    let n = sp.n();
    let p = sp.p();
    let l = sp.l();
    let nu = (n + l + 1) as f64;

    let mut it = Iterate {
        x: SymMatrix::identity(n),
        u: vec![1.0; l],
        y: vec![0.0; p],
        z: SymMatrix::identity(n),
        w: vec![1.0; l],
        tau: 1.0,
        kappa: 1.0,
    };

    let unscale = |it: &Iterate, div: f64| -> (SymMatrix, Vec<f64>, Vec<f64>, SymMatrix, Vec<f64>) {
        let x = it.x.scaled(1.0 / div);
        let u: Vec<f64> = it.u.iter().map(|v| v / div).collect();
        let y: Vec<f64> = (0..p)
            .map(|k| it.y[k] * scaling.row[k] / (scaling.obj * div))
            .collect();
        let z = it.z.scaled(1.0 / (scaling.obj * div));
        let w: Vec<f64> = it.w.iter().map(|v| v / (scaling.obj * div)).collect();
        (x, u, y, z, w)
    };

    let finish = |it: &Iterate, status: ConicStatus, iterations: usize| -> ConicSolution {
        let (x, u, y, z, w) = unscale(it, it.tau);
        let (pres, dres, gap, pobj, dobj) = prob.evaluate(&x, &u, &y, &z, &w);
        ConicSolution {
            status,
            x,
            u,
            y,
            z,
            w,
            primal_objective: pobj,
            dual_objective: dobj,
            primal_residual: pres,
            dual_residual: dres,
            gap,
            iterations,
        }
    };

    let mut stalls = 0;
    let mut best: Option<(f64, Iterate, usize)> = None;
    let mut last = 0;
    for iter in 0..=settings.max_iter {
        let res = residuals(&sp, &it);

        // Convergence, measured on the unscaled problem.
        let (x, u, y, z, w) = unscale(&it, it.tau);
        let (pres, dres, gap, _, _) = prob.evaluate(&x, &u, &y, &z, &w);
        if pres <= settings.feas_tol && dres <= settings.feas_tol && gap <= settings.gap_tol {
            return Ok(finish(&it, ConicStatus::Optimal, iter));
        }
        // Late iterates can lose accuracy, so the fallback uses the best one.
        let err = pres.max(dres).max(gap);
        if err.is_finite() && best.as_ref().is_none_or(|(e, _, _)| err < *e) {
            best = Some((err, it.clone(), iter));
        }
        last = iter;
        if best.as_ref().is_some_and(|(e, _, i)| *e <= settings.fallback_tol && iter >= i + STALL_WINDOW) {
            break;
        }

        // Infeasibility certificates, on the unscaled data.
        let (x, u, y, z, w) = unscale(&it, 1.0);
        let by = dot(&prob.b, &y);
        if by > 0.0 {
            let ray = prob.adjoint(&y).add(&z).frobenius_norm();
            let gty = prob.g.t_mul_vec(&y);
            let rayf: Vec<f64> = (0..l).map(|j| gty[j] + w[j]).collect();
            let scale = 1.0 + prob.c.frobenius_norm() + norm2(&prob.f);
            if (ray + norm2(&rayf)) * scale <= settings.infeas_tol * by {
                return Ok(ConicSolution {
                    status: ConicStatus::PrimalInfeasible,
                    x: SymMatrix::zeros(n),
                    u: vec![0.0; l],
                    y: y.iter().map(|v| v / by).collect(),
                    z: z.scaled(1.0 / by),
                    w: w.iter().map(|v| v / by).collect(),
                    primal_objective: f64::INFINITY,
                    dual_objective: f64::INFINITY,
                    primal_residual: f64::INFINITY,
                    dual_residual: 0.0,
                    gap: f64::INFINITY,
                    iterations: iter,
                });
            }
        }
        let cx = prob.c.inner(&x) + dot(&prob.f, &u);
        if cx < 0.0 {
            let ray = norm_inf(&{
                let mut r = prob.apply(&x);
                let gu = prob.g.mul_vec(&u);
                for (k, v) in r.iter_mut().enumerate() {
                    *v += gu[k];
                }
                r
            });
            let scale = 1.0 + norm_inf(&prob.b);
            if ray * scale <= settings.infeas_tol * (-cx) {
                let s = -1.0 / cx;
                return Ok(ConicSolution {
                    status: ConicStatus::DualInfeasible,
                    x: x.scaled(s),
                    u: u.iter().map(|v| v * s).collect(),
                    y: vec![0.0; p],
                    z: SymMatrix::zeros(n),
                    w: vec![0.0; l],
                    primal_objective: f64::NEG_INFINITY,
                    dual_objective: f64::NEG_INFINITY,
                    primal_residual: 0.0,
                    dual_residual: f64::INFINITY,
                    gap: f64::INFINITY,
                    iterations: iter,
                });
            }
        }

        if iter == settings.max_iter {
            break;
        }

        let newton = match Newton::new(&sp, &it, &res) {
            Ok(nw) => nw,
            Err(_) => break,
        };
        let mu0 = mu(&it, nu);

        // Predictor.
        let t_aff = SymMatrix::from_diag(&newton.lambda.iter().map(|v| -v).collect::<Vec<_>>());
        let rho_u: Vec<f64> = (0..l).map(|j| -it.u[j] * it.w[j]).collect();
        let aff = newton.solve(&it, &res, 1.0, &t_aff, &rho_u, -it.tau * it.kappa);
        if !aff.is_finite() {
            break;
        }
        let alpha_aff = match newton.max_step(&it, &aff) {
            Ok(a) => a.min(1.0),
            Err(_) => break,
        };
        let mu_aff = {
            let lam = SymMatrix::from_diag(&newton.lambda);
            let mut xs = lam.clone();
            xs.add_scaled(&aff.sx, alpha_aff);
            let mut zs = lam;
            zs.add_scaled(&aff.sz, alpha_aff);
            let mut s = xs.inner(&zs);
            for j in 0..l {
                s += (it.u[j] + alpha_aff * aff.du[j]) * (it.w[j] + alpha_aff * aff.dw[j]);
            }
            s += (it.tau + alpha_aff * aff.dtau) * (it.kappa + alpha_aff * aff.dkappa);
            s / nu
        };
        let s = (mu_aff / mu0).clamp(0.0, 1.0);
        let sigma = s * s * s;

        // Corrector.
        let target = sigma * mu0;
        let prod = aff.sx.to_mat().matmul(&aff.sz.to_mat());
        let t_cor = SymMatrix::from_fn(n, |i, j| {
            let lam2 = if i == j { newton.lambda[i] * newton.lambda[i] } else { 0.0 };
            let tgt = if i == j { target } else { 0.0 };
            let rhs = tgt - lam2 - 0.5 * (prod[(i, j)] + prod[(j, i)]);
            2.0 * rhs / (newton.lambda[i] + newton.lambda[j])
        });
        let rho_u: Vec<f64> = (0..l)
            .map(|j| target - it.u[j] * it.w[j] - aff.du[j] * aff.dw[j])
            .collect();
        let rho_tau = target - it.tau * it.kappa - aff.dtau * aff.dkappa;
        let dir = newton.solve(&it, &res, 1.0 - sigma, &t_cor, &rho_u, rho_tau);
        if !dir.is_finite() {
            break;
        }
        let alpha = match newton.max_step(&it, &dir) {
            Ok(a) => (settings.step_fraction * a).min(1.0),
            Err(_) => break,
        };
        if !(alpha > 1e-10) || !alpha.is_finite() {
            stalls += 1;
            if stalls > 3 {
                break;
            }
            continue;
        }

        it.x.add_scaled(&dir.dx, alpha);
        it.z.add_scaled(&dir.dz, alpha);
        for j in 0..l {
            it.u[j] += alpha * dir.du[j];
            it.w[j] += alpha * dir.dw[j];
        }
        for k in 0..p {
            it.y[k] += alpha * dir.dy[k];
        }
        it.tau += alpha * dir.dtau;
        it.kappa += alpha * dir.dkappa;

        // Keep the homogeneous scale bounded.
        let scale = it.tau + it.kappa;
        if !(scale.is_finite()) {
            break;
        }
        if !(1e-8..=1e8).contains(&scale) {
            let s = 1.0 / scale;
            it.x = it.x.scaled(s);
            it.z = it.z.scaled(s);
            it.u.iter_mut().for_each(|v| *v *= s);
            it.w.iter_mut().for_each(|v| *v *= s);
            it.y.iter_mut().for_each(|v| *v *= s);
            it.tau *= s;
            it.kappa *= s;
        }
    }

    let sol = match best {
        Some((_, b, i)) => finish(&b, ConicStatus::NumericalFailure, i),
        None => finish(&it, ConicStatus::NumericalFailure, last),
    };
    if sol.primal_residual <= settings.fallback_tol
        && sol.dual_residual <= settings.fallback_tol
        && sol.gap <= settings.fallback_tol
        && sol.x.min_eigenvalue().map(|v| v >= -1e-8).unwrap_or(false)
    {
        return Ok(ConicSolution {
            status: ConicStatus::Optimal,
            ..sol
        });
    }
    Ok(sol)
}
