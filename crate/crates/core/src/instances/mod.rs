//! Random instance families and the classic worst-case examples.

mod brute;
mod canonical;

pub use brute::{brute_force_qcqp, BruteForce, BruteForceError};
pub use canonical::{canonical, example_3_7_feasible_point, example_4_4_polar_value, CanonicalExample, ExampleId};

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::linalg::{classify, Definiteness, HermMatrix, Mat, SymMatrix};
use crate::math::{ceil, sqrt};
use crate::rng::{stream, Rng};
use crate::sdp::{slater_check, Field, QcqpInstance, SdpError, Sense};

/// Random constraint families.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Case {
    /// One indefinite constraint, the rest positive definite.
    A,
    /// 10% indefinite, the rest positive definite.
    B,
    /// One indefinite constraint, the rest rank-one PSD.
    C,
    /// 10% indefinite, the rest rank-one PSD.
    D,
}

impl Case {
    pub const ALL: [Case; 4] = [Case::A, Case::B, Case::C, Case::D];

    pub fn name(self) -> &'static str {
        match self {
            Case::A => "a",
            Case::B => "b",
            Case::C => "c",
            Case::D => "d",
        }
    }

    pub fn parse(s: &str) -> Option<Case> {
        match s.trim().to_ascii_lowercase().as_str() {
            "a" => Some(Case::A),
            "b" => Some(Case::B),
            "c" => Some(Case::C),
            "d" => Some(Case::D),
            _ => None,
        }
    }

    /// Number of indefinite constraints among `m + 1`.
    pub fn num_indefinite(self, m: usize) -> usize {
        match self {
            Case::A | Case::C => 1,
            Case::B | Case::D => ceil(0.1 * (m + 1) as f64) as usize,
        }
    }

    fn rank_one(self) -> bool {
        matches!(self, Case::C | Case::D)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum ObjectiveKind {
    Identity,
    Indefinite,
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GeneratorSpec {
    pub n: usize,
    /// Constraints are `A_0 .. A_m`.
    pub m: usize,
    pub case: Case,
    pub sense: Sense,
    pub field: Field,
    pub objective: ObjectiveKind,
    pub seed: u64,
}

impl GeneratorSpec {
    /// Identity objective for minimization, indefinite for maximization.
    pub fn new(case: Case, n: usize, m: usize, sense: Sense, field: Field, seed: u64) -> Self {
        let objective = match sense {
            Sense::Minimize => ObjectiveKind::Identity,
            Sense::Maximize => ObjectiveKind::Indefinite,
        };
        Self {
            n,
            m,
            case,
            sense,
            field,
            objective,
            seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Generated {
    pub instance: QcqpInstance,
    /// Draws rejected because the relaxation could be infeasible.
    pub retries: usize,
    /// Every attempt was rejected; `instance` is the last draw.
    pub retry_cap_hit: bool,
}

/// Rejected minimization draws before giving up.
pub const MAX_RETRIES: usize = 20;

/// Draws an instance. Minimization draws are rejected while some convex
/// combination of the constraints is negative definite, since such an
/// instance has an infeasible relaxation.
pub fn generate(spec: &GeneratorSpec) -> Result<Generated, SdpError> {
    assert!(spec.n >= 1, "dimension must be positive");
    let mut retries = 0;
    loop {
        let mut rng = stream(spec.seed, retries as u64);
        let inst = draw(spec, &mut rng)?;
        let accept = match spec.sense {
            Sense::Maximize => true,
            Sense::Minimize => {
                let rep = slater_check(&inst)?;
                matches!(rep.negative.t, Some(t) if t < 0.0)
            }
        };
        if accept {
            return Ok(Generated {
                instance: inst,
                retries,
                retry_cap_hit: false,
            });
        }
        if retries == MAX_RETRIES {
            return Ok(Generated {
                instance: inst,
                retries,
                retry_cap_hit: true,
            });
        }
        retries += 1;
    }
}

fn draw(spec: &GeneratorSpec, rng: &mut Rng) -> Result<QcqpInstance, SdpError> {
    let n = spec.n;
    let k_indef = spec.case.num_indefinite(spec.m).min(spec.m + 1);
    let mut constraints = Vec::with_capacity(spec.m + 1);
    for k in 0..=spec.m {
        let kind = if k < k_indef {
            Spectrum::Indefinite
        } else if spec.case.rank_one() {
            Spectrum::RankOne
        } else {
            Spectrum::FullRank
        };
        constraints.push(random_matrix(rng, n, spec.field, kind)?);
    }
    let objective = match spec.objective {
        ObjectiveKind::Identity => HermMatrix::from_real(&SymMatrix::identity(n)),
        ObjectiveKind::Indefinite => random_matrix(rng, n, spec.field, Spectrum::Indefinite)?,
    };
    QcqpInstance::new(spec.sense, spec.field, objective, constraints)
}

#[derive(Clone, Copy)]
enum Spectrum {
    FullRank,
    RankOne,
    Indefinite,
}

fn randn(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// `rand * Q^* diag(d) Q` with `Q` from a QR factorization of a Gaussian matrix.
fn random_matrix(rng: &mut Rng, n: usize, field: Field, kind: Spectrum) -> Result<HermMatrix, SdpError> {
    loop {
        let scale: f64 = rng.random();
        let d: Vec<f64> = match kind {
            Spectrum::FullRank => (0..n).map(|_| randn(rng).abs()).collect(),
            Spectrum::RankOne => {
                let mut d = vec![0.0; n];
                d[0] = randn(rng).abs();
                d
            }
            Spectrum::Indefinite => (0..n).map(|_| randn(rng)).collect(),
        };
        let h = match field {
            Field::Real => {
                let g = Mat::from_fn(n, n, |_, _| randn(rng));
                let q = g.qr_q();
                let m = SymMatrix::from_fn(n, |i, j| {
                    scale * (0..n).map(|k| q[(k, i)] * d[k] * q[(k, j)]).sum::<f64>()
                });
                HermMatrix::from_real(&m)
            }
            Field::Complex => {
                let (qr, qi) = unitary(rng, n);
                // (Q^* D Q)_ij = sum_k conj(Q_ki) d_k Q_kj
                let mut re = vec![0.0; n * n];
                let mut im = vec![0.0; n * n];
                for i in 0..n {
                    for j in 0..n {
                        let mut sr = 0.0;
                        let mut si = 0.0;
                        for k in 0..n {
                            let (ar, ai) = (qr[(k, i)], -qi[(k, i)]);
                            let (br, bi) = (qr[(k, j)], qi[(k, j)]);
                            sr += d[k] * (ar * br - ai * bi);
                            si += d[k] * (ar * bi + ai * br);
                        }
                        re[i * n + j] = scale * sr;
                        im[i * n + j] = scale * si;
                    }
                }
                HermMatrix::new(n, re, im)?
            }
        };
        if matches!(kind, Spectrum::Indefinite) {
            let tag = match field {
                Field::Real => classify(&h.real_part())?,
                Field::Complex => classify(&crate::linalg::herm_embed(&h))?,
            };
            if tag != Definiteness::Indefinite {
                continue;
            }
        }
        if scale == 0.0 {
            continue;
        }
        return Ok(h);
    }
}

/// Unitary matrix (real and imaginary parts) from modified Gram-Schmidt on
/// the columns of a complex Gaussian matrix.
fn unitary(rng: &mut Rng, n: usize) -> (Mat, Mat) {
    let mut re = Mat::from_fn(n, n, |_, _| randn(rng));
    let mut im = Mat::from_fn(n, n, |_, _| randn(rng));
    for j in 0..n {
        for k in 0..j {
            // <q_k, v_j> = sum conj(q_k) v_j
            let mut pr = 0.0;
            let mut pi = 0.0;
            for i in 0..n {
                let (ar, ai) = (re[(i, k)], -im[(i, k)]);
                let (br, bi) = (re[(i, j)], im[(i, j)]);
                pr += ar * br - ai * bi;
                pi += ar * bi + ai * br;
            }
            for i in 0..n {
                let (qr, qi) = (re[(i, k)], im[(i, k)]);
                re[(i, j)] -= pr * qr - pi * qi;
                im[(i, j)] -= pr * qi + pi * qr;
            }
        }
        let nrm = sqrt((0..n).map(|i| re[(i, j)] * re[(i, j)] + im[(i, j)] * im[(i, j)]).sum());
        for i in 0..n {
            re[(i, j)] /= nrm;
            im[(i, j)] /= nrm;
        }
    }
    (re, im)
}
