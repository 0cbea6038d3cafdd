//! Dense real symmetric and complex Hermitian matrices.
//!
//! Everything downstream works on [`SymMatrix`]; complex data enters through
//! [`herm_embed`], which maps an `n x n` Hermitian matrix to the `2n x 2n`
//! real symmetric matrix `[[Re, -Im], [Im, Re]]`.

mod dense;
mod eigen;

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

pub use dense::{Cholesky, Mat};
pub use eigen::{sym_eig, Spectrum};

use crate::math::sqrt;

/// Asymmetry accepted by the strict constructors.
pub const STRICT_SYMMETRY_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("matrix dimension must be positive")]
    EmptyMatrix,
    #[error("matrix is not symmetric: max asymmetry {asymmetry:e}")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not Hermitian: max asymmetry {asymmetry:e}")]
    NotHermitian { asymmetry: f64 },
    #[error("Jacobi iteration did not converge after {sweeps} sweeps (off-diagonal norm {residual:e})")]
    NoConvergence { sweeps: usize, residual: f64 },
    #[error("matrix is not positive definite (pivot {index} = {pivot:e})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("matrix is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPsd { min_eigenvalue: f64 },
    #[error("non-finite entry")]
    NonFinite,
}

/// Real symmetric `n x n` matrix stored row-major. Symmetry is exact.
#[derive(Clone, PartialEq)]
pub struct SymMatrix {
    n: usize,
    data: Vec<f64>,
}

impl SymMatrix {
    /// Builds a symmetric matrix from row-major entries, replacing the input
    /// by `(M + M^T) / 2`.
    pub fn new(n: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        Self::check_shape(n, &entries)?;
        let mut data = entries;
        for i in 0..n {
            for j in (i + 1)..n {
                let avg = 0.5 * (data[i * n + j] + data[j * n + i]);
                data[i * n + j] = avg;
                data[j * n + i] = avg;
            }
        }
        Ok(Self { n, data })
    }

    /// Like [`SymMatrix::new`] but rejects input whose asymmetry exceeds
    /// [`STRICT_SYMMETRY_TOL`].
    pub fn new_strict(n: usize, entries: Vec<f64>) -> Result<Self, LinalgError> {
        Self::check_shape(n, &entries)?;
        let asymmetry = max_asymmetry(n, &entries, 1.0);
        if asymmetry > STRICT_SYMMETRY_TOL {
            return Err(LinalgError::NotSymmetric { asymmetry });
        }
        Self::new(n, entries)
    }

    fn check_shape(n: usize, entries: &[f64]) -> Result<(), LinalgError> {
        if n == 0 {
            return Err(LinalgError::EmptyMatrix);
        }
        if entries.len() != n * n {
            return Err(LinalgError::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        if entries.iter().any(|x| !x.is_finite()) {
            return Err(LinalgError::NonFinite);
        }
        Ok(())
    }

    pub fn zeros(n: usize) -> Self {
        assert!(n > 0, "matrix dimension must be positive");
        Self {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diag(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds from the upper triangle of `f(i, j)`, `i <= j`.
    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            for j in i..n {
                let v = f(i, j);
                m.data[i * n + j] = v;
                m.data[j * n + i] = v;
            }
        }
        m
    }

    /// Symmetrizes a square dense matrix.
    pub fn from_mat(m: &Mat) -> Result<Self, LinalgError> {
        if m.rows() != m.cols() {
            return Err(LinalgError::DimensionMismatch {
                expected: m.rows(),
                got: m.cols(),
            });
        }
        Self::new(m.rows(), m.as_slice().to_vec())
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    /// Sets both `(i, j)` and `(j, i)`.
    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
        self.data[j * self.n + i] = v;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_mat(&self) -> Mat {
        Mat::from_vec(self.n, self.n, self.data.clone())
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.get(i, i)).sum()
    }

    /// `Tr(self * other)`.
    pub fn inner(&self, other: &SymMatrix) -> f64 {
        debug_assert_eq!(self.n, other.n);
        self.data.iter().zip(&other.data).map(|(a, b)| a * b).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, x| m.max(x.abs()))
    }

    /// `x^T M x`.
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.n);
        let n = self.n;
        let mut acc = 0.0;
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let mut r = 0.0;
            for j in 0..n {
                r += row[j] * x[j];
            }
            acc += x[i] * r;
        }
        acc
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        (0..n)
            .map(|i| {
                self.data[i * n..(i + 1) * n]
                    .iter()
                    .zip(x)
                    .map(|(a, b)| a * b)
                    .sum()
            })
            .collect()
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self {
            n: self.n,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    /// `self += s * other`.
    pub fn add_scaled(&mut self, other: &SymMatrix, s: f64) {
        debug_assert_eq!(self.n, other.n);
        for (a, b) in self.data.iter_mut().zip(&other.data) {
            *a += s * b;
        }
    }

    pub fn add(&self, other: &SymMatrix) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, 1.0);
        out
    }

    pub fn sub(&self, other: &SymMatrix) -> Self {
        let mut out = self.clone();
        out.add_scaled(other, -1.0);
        out
    }

    /// `self * m` as a dense matrix.
    pub fn mul_mat(&self, m: &Mat) -> Mat {
        self.to_mat().matmul(m)
    }

    /// `R^T * self * R` for an `n x r` matrix `R`.
    pub fn congruence(&self, r: &Mat) -> SymMatrix {
        debug_assert_eq!(r.rows(), self.n);
        let ar = self.mul_mat(r);
        let out = r.t_matmul(&ar);
        SymMatrix::from_mat(&out).expect("square by construction")
    }

    /// `R * self * R^T` for an `r x n` matrix `R`.
    pub fn congruence_t(&self, r: &Mat) -> SymMatrix {
        debug_assert_eq!(r.cols(), self.n);
        let ra = r.matmul(&self.to_mat());
        let out = ra.matmul_t(r);
        SymMatrix::from_fn(out.rows(), |i, j| 0.5 * (out[(i, j)] + out[(j, i)]))
    }

    pub fn eig(&self) -> Result<Spectrum, LinalgError> {
        sym_eig(self)
    }

    pub fn min_eigenvalue(&self) -> Result<f64, LinalgError> {
        Ok(*self.eig()?.eigenvalues.last().expect("n >= 1"))
    }
}

impl fmt::Debug for SymMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "SymMatrix({}x{}) [", self.n, self.n)?;
        for i in 0..self.n {
            writeln!(f, "  {:?}", &self.data[i * self.n..(i + 1) * self.n])?;
        }
        write!(f, "]")
    }
}

fn max_asymmetry(n: usize, data: &[f64], sign: f64) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in i..n {
            worst = worst.max((data[i * n + j] - sign * data[j * n + i]).abs());
        }
    }
    worst
}

/// Complex Hermitian `n x n` matrix split into a symmetric real part and an
/// antisymmetric imaginary part.
#[derive(Clone, PartialEq)]
pub struct HermMatrix {
    n: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl HermMatrix {
    /// Projects the input onto the Hermitian matrices: `re` is symmetrized,
    /// `im` antisymmetrized.
    pub fn new(n: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self, LinalgError> {
        SymMatrix::check_shape(n, &re)?;
        SymMatrix::check_shape(n, &im)?;
        let re = SymMatrix::new(n, re)?.data;
        let mut im = im;
        for i in 0..n {
            im[i * n + i] = 0.0;
            for j in (i + 1)..n {
                let avg = 0.5 * (im[i * n + j] - im[j * n + i]);
                im[i * n + j] = avg;
                im[j * n + i] = -avg;
            }
        }
        Ok(Self { n, re, im })
    }

    pub fn new_strict(n: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self, LinalgError> {
        SymMatrix::check_shape(n, &re)?;
        SymMatrix::check_shape(n, &im)?;
        let asymmetry = max_asymmetry(n, &re, 1.0).max(max_asymmetry(n, &im, -1.0));
        if asymmetry > STRICT_SYMMETRY_TOL {
            return Err(LinalgError::NotHermitian { asymmetry });
        }
        Self::new(n, re, im)
    }

    pub fn from_real(m: &SymMatrix) -> Self {
        Self {
            n: m.n,
            re: m.data.clone(),
            im: vec![0.0; m.n * m.n],
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn is_real(&self) -> bool {
        self.im.iter().all(|&x| x == 0.0)
    }

    pub fn real_part(&self) -> SymMatrix {
        SymMatrix {
            n: self.n,
            data: self.re.clone(),
        }
    }

    /// Real trace, `Tr(H)`.
    pub fn trace(&self) -> f64 {
        (0..self.n).map(|i| self.re[i * self.n + i]).sum()
    }

    /// Inverse of [`herm_embed`] for matrices of the form `[[P, -Q], [Q, P]]`.
    /// Only the top-left and bottom-left blocks are read.
    pub fn from_embedding(m: &SymMatrix) -> Result<Self, LinalgError> {
        if m.n() % 2 != 0 {
            return Err(LinalgError::DimensionMismatch {
                expected: m.n() + 1,
                got: m.n(),
            });
        }
        let n = m.n() / 2;
        let mut re = vec![0.0; n * n];
        let mut im = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                re[i * n + j] = 0.5 * (m.get(i, j) + m.get(n + i, n + j));
                im[i * n + j] = 0.5 * (m.get(n + i, j) - m.get(i, n + j));
            }
        }
        Self::new(n, re, im)
    }
}

impl fmt::Debug for HermMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("HermMatrix")
            .field("n", &self.n)
            .field("re", &self.re)
            .field("im", &self.im)
            .finish()
    }
}

/// Real `2n x 2n` embedding `[[Re, -Im], [Im, Re]]`.
///
/// For `z = a + ib`, `z* H z = [a; b]^T embed(H) [a; b]`, every eigenvalue
/// of `H` appears twice in the embedding, and `Tr(embed(H)) = 2 Tr(H)`.
pub fn herm_embed(h: &HermMatrix) -> SymMatrix {
    let n = h.n;
    let big = 2 * n;
    let mut out = SymMatrix::zeros(big);
    for i in 0..n {
        for j in 0..n {
            let re = h.re[i * n + j];
            let im = h.im[i * n + j];
            out.data[i * big + j] = re;
            out.data[(n + i) * big + (n + j)] = re;
            out.data[i * big + (n + j)] = -im;
            out.data[(n + i) * big + j] = im;
        }
    }
    out
}

/// `Tr(AB) = sum_ij A_ij B_ij`.
pub fn trace_inner(a: &SymMatrix, b: &SymMatrix) -> Result<f64, LinalgError> {
    if a.n != b.n {
        return Err(LinalgError::DimensionMismatch {
            expected: a.n,
            got: b.n,
        });
    }
    Ok(a.inner(b))
}

pub fn frobenius_norm(m: &SymMatrix) -> f64 {
    m.frobenius_norm()
}

/// Definiteness class of a symmetric matrix, decided from its spectrum with
/// tolerance `1e-9 * ||M||_F`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Definiteness {
    Psd,
    Indefinite,
    Nsd,
}

pub const DEFINITENESS_TOL: f64 = 1e-9;

pub fn classify(m: &SymMatrix) -> Result<Definiteness, LinalgError> {
    let spec = m.eig()?;
    Ok(classify_spectrum(&spec.eigenvalues, m.frobenius_norm()))
}

pub fn classify_spectrum(eigenvalues: &[f64], norm: f64) -> Definiteness {
    let tol = DEFINITENESS_TOL * norm;
    let min = eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = eigenvalues.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if min >= -tol {
        Definiteness::Psd
    } else if max <= tol {
        Definiteness::Nsd
    } else {
        Definiteness::Indefinite
    }
}

/// Numerical rank: eigenvalues (or singular values) above `rel_tol * max`.
pub fn numerical_rank(values: &[f64], rel_tol: f64) -> usize {
    let max = values.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return 0;
    }
    values.iter().filter(|v| v.abs() > rel_tol * max).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_symmetrizes() {
        let m = SymMatrix::new(2, vec![1.0, 2.0, 4.0, 3.0]).unwrap();
        assert_eq!(m.get(0, 1), 3.0);
        assert_eq!(m.get(1, 0), 3.0);
    }

    #[test]
    fn strict_rejects_asymmetric() {
        let err = SymMatrix::new_strict(2, vec![1.0, 2.0, 2.1, 3.0]).unwrap_err();
        assert!(matches!(err, LinalgError::NotSymmetric { .. }));
        assert!(SymMatrix::new_strict(2, vec![1.0, 2.0, 2.0 + 1e-10, 3.0]).is_ok());
    }

    #[test]
    fn rejects_bad_shapes() {
        assert_eq!(SymMatrix::new(0, vec![]), Err(LinalgError::EmptyMatrix));
        assert!(matches!(
            SymMatrix::new(2, vec![1.0; 3]),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        assert_eq!(
            SymMatrix::new(1, vec![f64::NAN]),
            Err(LinalgError::NonFinite)
        );
    }

    #[test]
    fn trace_inner_identity() {
        let i2 = SymMatrix::identity(2);
        assert_eq!(trace_inner(&i2, &i2).unwrap(), 2.0);
        assert!(trace_inner(&i2, &SymMatrix::identity(3)).is_err());
    }

    #[test]
    fn frobenius_examples() {
        assert!((frobenius_norm(&SymMatrix::identity(3)) - 3f64.sqrt()).abs() < 1e-15);
        assert_eq!(frobenius_norm(&SymMatrix::zeros(4)), 0.0);
        // A_3 X for the maximization example with M = 10.
        let m = SymMatrix::from_diag(&[11.0, -10.0]);
        assert!((frobenius_norm(&m) - 221f64.sqrt()).abs() < 1e-13);
    }

    #[test]
    fn embed_real_is_block_diagonal() {
        let re = SymMatrix::new(2, vec![1.0, 2.0, 2.0, 5.0]).unwrap();
        let e = herm_embed(&HermMatrix::from_real(&re));
        for i in 0..2 {
            for j in 0..2 {
                assert_eq!(e.get(i, j), re.get(i, j));
                assert_eq!(e.get(i + 2, j + 2), re.get(i, j));
                assert_eq!(e.get(i, j + 2), 0.0);
            }
        }
    }

    #[test]
    fn embed_doubles_spectrum() {
        // H = [[1, i], [-i, 1]] has eigenvalues {2, 0}.
        let h = HermMatrix::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let e = herm_embed(&h);
        let ev = e.eig().unwrap().eigenvalues;
        let want = [2.0, 2.0, 0.0, 0.0];
        for (a, b) in ev.iter().zip(want) {
            assert!((a - b).abs() < 1e-12, "{ev:?}");
        }
        assert!((e.trace() - 2.0 * h.trace()).abs() < 1e-15);
    }

    #[test]
    fn embedding_round_trip() {
        let h = HermMatrix::new(
            2,
            vec![1.0, 0.5, 0.5, -2.0],
            vec![0.0, 0.25, -0.25, 0.0],
        )
        .unwrap();
        let back = HermMatrix::from_embedding(&herm_embed(&h)).unwrap();
        assert_eq!(back, h);
    }

    #[test]
    fn hermitian_projection() {
        let h = HermMatrix::new(2, vec![1.0, 0.0, 0.0, 1.0], vec![3.0, 1.0, 0.0, 0.0]).unwrap();
        assert_eq!(h.im(), &[0.0, 0.5, -0.5, 0.0]);
        assert!(HermMatrix::new_strict(2, vec![1.0, 0.0, 0.0, 1.0], vec![0.0, 1.0, 1.0, 0.0]).is_err());
    }

    #[test]
    fn classification() {
        assert_eq!(classify(&SymMatrix::identity(3)).unwrap(), Definiteness::Psd);
        assert_eq!(
            classify(&SymMatrix::from_diag(&[1.0, -1.0])).unwrap(),
            Definiteness::Indefinite
        );
        assert_eq!(
            classify(&SymMatrix::from_diag(&[-1.0, 0.0])).unwrap(),
            Definiteness::Nsd
        );
        assert_eq!(
            classify(&SymMatrix::from_diag(&[1.0, 0.0])).unwrap(),
            Definiteness::Psd
        );
    }
}
