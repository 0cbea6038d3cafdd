use alloc::vec;
use alloc::vec::Vec;

use super::ipm::{solve_conic, ConicProblem, ConicStatus, IpmSettings};
use super::SdpError;
use crate::linalg::{
    classify_spectrum, herm_embed, numerical_rank, Definiteness, HermMatrix, Mat, SymMatrix,
};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Sense {
    /// `min x*Cx  s.t.  x*A_k x >= 1`.
    #[cfg_attr(feature = "serde", serde(rename = "min"))]
    Minimize,
    /// `max x*Cx  s.t.  x*A_k x <= 1`.
    #[cfg_attr(feature = "serde", serde(rename = "max"))]
    Maximize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Field {
    Real,
    Complex,
}

impl Field {
    /// Right-hand side of the relaxation in the real working space. The
    /// embedding doubles every trace, so complex constraints read `>= 2`.
    pub fn rhs(self) -> f64 {
        match self {
            Field::Real => 1.0,
            Field::Complex => 2.0,
        }
    }
}

/// Homogeneous QCQP. Complex data is kept both as Hermitian matrices and as
/// their real embeddings; every numerical routine works on the latter.
#[derive(Debug, Clone)]
pub struct QcqpInstance {
    sense: Sense,
    field: Field,
    objective: HermMatrix,
    constraints: Vec<HermMatrix>,
    tags: Vec<Definiteness>,
    c_work: SymMatrix,
    a_work: Vec<SymMatrix>,
}

impl QcqpInstance {
    pub fn new(
        sense: Sense,
        field: Field,
        objective: HermMatrix,
        constraints: Vec<HermMatrix>,
    ) -> Result<Self, SdpError> {
        if constraints.is_empty() {
            return Err(SdpError::NoConstraints);
        }
        let n = objective.n();
        for a in &constraints {
            if a.n() != n {
                return Err(SdpError::DimensionMismatch {
                    expected: n,
                    got: a.n(),
                });
            }
        }
        if field == Field::Real
            && (!objective.is_real() || constraints.iter().any(|a| !a.is_real()))
        {
            return Err(SdpError::ComplexDataInRealInstance);
        }
        let work = |h: &HermMatrix| match field {
            Field::Real => h.real_part(),
            Field::Complex => herm_embed(h),
        };
        let c_work = work(&objective);
        let a_work: Vec<SymMatrix> = constraints.iter().map(work).collect();
        let mut tags = Vec::with_capacity(a_work.len());
        for a in &a_work {
            let ev = a.eig()?.eigenvalues;
            let norm = match field {
                Field::Real => a.frobenius_norm(),
                Field::Complex => a.frobenius_norm() / sqrt(2.0),
            };
            tags.push(classify_spectrum(&ev, norm));
        }
        Ok(Self {
            sense,
            field,
            objective,
            constraints,
            tags,
            c_work,
            a_work,
        })
    }

    pub fn real(sense: Sense, objective: SymMatrix, constraints: Vec<SymMatrix>) -> Result<Self, SdpError> {
        Self::new(
            sense,
            Field::Real,
            HermMatrix::from_real(&objective),
            constraints.iter().map(HermMatrix::from_real).collect(),
        )
    }

    pub fn sense(&self) -> Sense {
        self.sense
    }

    pub fn field(&self) -> Field {
        self.field
    }

    /// Dimension of the decision variable over its own field.
    pub fn n(&self) -> usize {
        self.objective.n()
    }

    /// Dimension of the real working space (`2n` for complex instances).
    pub fn work_dim(&self) -> usize {
        self.c_work.n()
    }

    pub fn num_constraints(&self) -> usize {
        self.constraints.len()
    }

    /// Largest constraint index; constraints are `A_0 .. A_m`.
    pub fn m(&self) -> usize {
        self.constraints.len() - 1
    }

    pub fn objective(&self) -> &HermMatrix {
        &self.objective
    }

    pub fn constraints(&self) -> &[HermMatrix] {
        &self.constraints
    }

    pub fn tags(&self) -> &[Definiteness] {
        &self.tags
    }

    pub fn indices_tagged(&self, tag: Definiteness) -> Vec<usize> {
        (0..self.tags.len()).filter(|&k| self.tags[k] == tag).collect()
    }

    pub fn num_indefinite(&self) -> usize {
        self.tags.iter().filter(|t| **t == Definiteness::Indefinite).count()
    }

    /// Objective in the real working space.
    pub fn objective_work(&self) -> &SymMatrix {
        &self.c_work
    }

    /// Constraints in the real working space.
    pub fn constraints_work(&self) -> &[SymMatrix] {
        &self.a_work
    }

    /// `x*Cx` for a working-space vector (`[Re z; Im z]` when complex).
    pub fn objective_at(&self, x: &[f64]) -> f64 {
        self.c_work.quad_form(x)
    }

    /// `x*A_k x` for every constraint.
    pub fn constraint_values(&self, x: &[f64]) -> Vec<f64> {
        self.a_work.iter().map(|a| a.quad_form(x)).collect()
    }

    /// Whether `x` satisfies every constraint up to `rel_tol`.
    pub fn is_feasible(&self, x: &[f64], rel_tol: f64) -> bool {
        self.constraint_values(x).iter().all(|&v| match self.sense {
            Sense::Minimize => v >= 1.0 - rel_tol,
            Sense::Maximize => v <= 1.0 + rel_tol,
        })
    }

    /// `Tr(A_k X)` in the field's own normalization for a working-space `X`.
    pub fn relaxed_values(&self, x: &SymMatrix) -> Vec<f64> {
        let s = 1.0 / self.field.rhs();
        self.a_work.iter().map(|a| a.inner(x) * s).collect()
    }

    /// `Tr(C X)` in the field's own normalization.
    pub fn relaxed_objective(&self, x: &SymMatrix) -> f64 {
        self.c_work.inner(x) / self.field.rhs()
    }
}

/// The relaxation as a conic program over the working space.
#[derive(Debug, Clone)]
pub struct Relaxation {
    pub sense: Sense,
    pub field: Field,
    pub conic: ConicProblem,
}

impl Relaxation {
    pub fn num_constraints(&self) -> usize {
        self.conic.p()
    }

    pub fn dim(&self) -> usize {
        self.conic.n()
    }
}

/// `min/max Tr(CX)  s.t.  Tr(A_k X) >= / <= 1,  X >= 0`, with one slack
/// per inequality. Maximization is posed as minimizing `-C`.
pub fn build_relaxation(inst: &QcqpInstance) -> Relaxation {
    let p = inst.num_constraints();
    let (c, slack) = match inst.sense {
        Sense::Minimize => (inst.c_work.clone(), -1.0),
        Sense::Maximize => (inst.c_work.scaled(-1.0), 1.0),
    };
    let conic = ConicProblem {
        c,
        a: inst.a_work.clone(),
        b: vec![inst.field.rhs(); p],
        g: Mat::from_fn(p, p, |i, j| if i == j { slack } else { 0.0 }),
        f: vec![0.0; p],
    };
    Relaxation {
        sense: inst.sense,
        field: inst.field,
        conic,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum SolveStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub status: SolveStatus,
    pub field: Field,
    /// Primal matrix in the working space. For complex instances this is the
    /// embedding of the Hermitian solution.
    pub x: SymMatrix,
    /// Optimal value in the field's own normalization.
    pub objective_value: f64,
    pub dual_objective: f64,
    /// One nonnegative multiplier per constraint.
    pub dual_multipliers: Vec<f64>,
    /// `C - sum_k y_k A_k` in the working space (sign-adjusted for maximization).
    pub dual_slack: SymMatrix,
    pub primal_residual: f64,
    pub dual_residual: f64,
    pub gap: f64,
    pub iterations: usize,
    /// Improving ray when `Unbounded`: PSD, trace one, `Tr(A_k D) <= 0`
    /// (resp. `>= 0` for minimization), strictly improving objective.
    pub ray: Option<SymMatrix>,
}

impl SdpSolution {
    /// Hermitian solution for complex instances.
    pub fn hermitian(&self) -> Option<HermMatrix> {
        match self.field {
            Field::Complex => HermMatrix::from_embedding(&self.x).ok(),
            Field::Real => None,
        }
    }

    /// Numerical rank over the instance's field (eigenvalues below
    /// `rel_tol * lambda_max` count as zero).
    pub fn rank(&self, rel_tol: f64) -> Result<usize, SdpError> {
        let ev = self.x.eig()?.eigenvalues;
        let r = numerical_rank(&ev, rel_tol);
        Ok(match self.field {
            Field::Real => r,
            Field::Complex => r.div_ceil(2),
        })
    }
}

/// `(X + J X J^T) / 2` with `J = [[0, -I], [I, 0]]`: projects a working-space
/// matrix onto embeddings of Hermitian matrices.
pub fn symmetrize_complex(x: &SymMatrix) -> SymMatrix {
    let n = x.n() / 2;
    SymMatrix::from_fn(x.n(), |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / n, j % n);
        // (J X J^T)_{ij}: J maps block 0 -> block 1 and block 1 -> -block 0.
        let sign_i = if bi == 0 { -1.0 } else { 1.0 };
        let sign_j = if bj == 0 { -1.0 } else { 1.0 };
        let si = (1 - bi) * n + ii;
        let sj = (1 - bj) * n + jj;
        0.5 * (x.get(i, j) + sign_i * sign_j * x.get(si, sj))
    })
}

pub fn solve(inst: &QcqpInstance) -> Result<SdpSolution, SdpError> {
    solve_with(inst, &IpmSettings::default())
}

pub fn solve_with(inst: &QcqpInstance, settings: &IpmSettings) -> Result<SdpSolution, SdpError> {
    let relax = build_relaxation(inst);
    let sol = solve_conic(&relax.conic, settings)?;
    let rhs = inst.field.rhs();
    let sign = match inst.sense {
        Sense::Minimize => 1.0,
        Sense::Maximize => -1.0,
    };
    let fix = |x: &SymMatrix| match inst.field {
        Field::Real => x.clone(),
        Field::Complex => symmetrize_complex(x),
    };
    let n = inst.work_dim();
    let p = inst.num_constraints();
    Ok(match sol.status {
        ConicStatus::Optimal | ConicStatus::NumericalFailure => SdpSolution {
            status: if sol.status == ConicStatus::Optimal {
                SolveStatus::Optimal
            } else {
                SolveStatus::NumericalFailure
            },
            field: inst.field,
            x: fix(&sol.x),
            objective_value: sign * sol.primal_objective / rhs,
            dual_objective: sign * sol.dual_objective / rhs,
            dual_multipliers: sol.w.clone(),
            dual_slack: fix(&sol.z).scaled(sign),
            primal_residual: sol.primal_residual,
            dual_residual: sol.dual_residual,
            gap: sol.gap,
            iterations: sol.iterations,
            ray: None,
        },
        ConicStatus::DualInfeasible => {
            let d = fix(&sol.x);
            let tr = d.trace();
            SdpSolution {
                status: SolveStatus::Unbounded,
                field: inst.field,
                x: SymMatrix::zeros(n),
                objective_value: sign * f64::NEG_INFINITY,
                dual_objective: f64::NAN,
                dual_multipliers: vec![f64::NAN; p],
                dual_slack: SymMatrix::zeros(n),
                primal_residual: 0.0,
                dual_residual: f64::INFINITY,
                gap: f64::INFINITY,
                iterations: sol.iterations,
                ray: Some(d.scaled(1.0 / tr)),
            }
        }
        ConicStatus::PrimalInfeasible => SdpSolution {
            status: SolveStatus::Infeasible,
            field: inst.field,
            x: SymMatrix::zeros(n),
            objective_value: sign * f64::INFINITY,
            dual_objective: f64::NAN,
            dual_multipliers: sol.w.clone(),
            dual_slack: fix(&sol.z).scaled(sign),
            primal_residual: f64::INFINITY,
            dual_residual: 0.0,
            gap: f64::INFINITY,
            iterations: sol.iterations,
            ray: None,
        },
    })
}
