//! JSON encodings of matrices, instances, solutions and factors.

use hquad_core::linalg::{HermMatrix, LinalgError, Mat, SymMatrix};
use hquad_core::rank::LowRankSolution;
use hquad_core::sdp::{QcqpInstance, SdpError, SdpSolution};
use hquad_core::{Field, Sense, SolveStatus};
use serde::{Deserialize, Serialize};
use serde_json::Value;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("malformed JSON: {0}")]
    Json(#[from] serde_json::Error),
    #[error("invalid matrix: {0}")]
    Linalg(#[from] LinalgError),
    #[error("invalid instance: {0}")]
    Sdp(#[from] SdpError),
    #[error("{0}")]
    Shape(String),
}

/// `{"n": int, "re": [...], "im": [...]}` with `im` absent for real data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixJson {
    pub n: usize,
    pub re: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl MatrixJson {
    pub fn from_sym(m: &SymMatrix) -> Self {
        Self {
            n: m.n(),
            re: m.as_slice().to_vec(),
            im: None,
        }
    }

    pub fn from_herm(h: &HermMatrix) -> Self {
        Self {
            n: h.n(),
            re: h.re().to_vec(),
            im: Some(h.im().to_vec()),
        }
    }

    /// Working-space matrix in the field's own form: complex matrices are
    /// folded back from their embedding.
    pub fn from_work(m: &SymMatrix, field: Field) -> Self {
        match field {
            Field::Real => Self::from_sym(m),
            Field::Complex => match HermMatrix::from_embedding(m) {
                Ok(h) => Self::from_herm(&h),
                Err(_) => Self::from_sym(m),
            },
        }
    }

    pub fn to_herm(&self) -> Result<HermMatrix, IoError> {
        let im = self.im.clone().unwrap_or_else(|| vec![0.0; self.re.len()]);
        Ok(HermMatrix::new_strict(self.n, self.re.clone(), im)?)
    }

    pub fn to_sym(&self) -> Result<SymMatrix, IoError> {
        if self.im.as_ref().is_some_and(|im| im.iter().any(|&v| v != 0.0)) {
            return Err(IoError::Shape("expected a real matrix".into()));
        }
        Ok(SymMatrix::new_strict(self.n, self.re.clone())?)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InstanceJson {
    pub sense: Sense,
    pub field: Field,
    #[serde(rename = "C")]
    pub c: MatrixJson,
    #[serde(rename = "A")]
    pub a: Vec<MatrixJson>,
}

impl InstanceJson {
    pub fn from_instance(inst: &QcqpInstance) -> Self {
        let enc = |h: &HermMatrix| match inst.field() {
            Field::Real => MatrixJson::from_sym(&h.real_part()),
            Field::Complex => MatrixJson::from_herm(h),
        };
        Self {
            sense: inst.sense(),
            field: inst.field(),
            c: enc(inst.objective()),
            a: inst.constraints().iter().map(enc).collect(),
        }
    }

    pub fn to_instance(&self) -> Result<QcqpInstance, IoError> {
        let c = self.c.to_herm()?;
        let a = self.a.iter().map(MatrixJson::to_herm).collect::<Result<Vec<_>, _>>()?;
        Ok(QcqpInstance::new(self.sense, self.field, c, a)?)
    }
}

pub fn parse_instance(text: &str) -> Result<QcqpInstance, IoError> {
    let j: InstanceJson = serde_json::from_str(text)?;
    j.to_instance()
}

pub fn instance_to_json(inst: &QcqpInstance) -> String {
    serde_json::to_string_pretty(&InstanceJson::from_instance(inst)).expect("instance serializes")
}

/// Solution in the instance's own field: complex matrices appear in
/// Hermitian form, values in the complex normalization.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionJson {
    pub status: SolveStatus,
    pub field: Field,
    pub objective_value: Value,
    pub dual_objective: Value,
    pub x: MatrixJson,
    pub rank: Option<usize>,
    pub dual_multipliers: Vec<f64>,
    pub dual_slack: MatrixJson,
    pub primal_residual: Value,
    pub dual_residual: Value,
    pub gap: Value,
    pub iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ray: Option<MatrixJson>,
}

impl SolutionJson {
    pub fn new(sol: &SdpSolution) -> Self {
        Self {
            status: sol.status,
            field: sol.field,
            objective_value: num(sol.objective_value),
            dual_objective: num(sol.dual_objective),
            x: MatrixJson::from_work(&sol.x, sol.field),
            rank: sol.rank(1e-9).ok(),
            dual_multipliers: sol.dual_multipliers.clone(),
            dual_slack: MatrixJson::from_work(&sol.dual_slack, sol.field),
            primal_residual: num(sol.primal_residual),
            dual_residual: num(sol.dual_residual),
            gap: num(sol.gap),
            iterations: sol.iterations,
            ray: sol.ray.as_ref().map(|d| MatrixJson::from_work(d, sol.field)),
        }
    }
}

/// `{"n", "r", "entries"}` with `entries` the row-major `n x r` factor;
/// complex factors add `"im"`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FactorJson {
    pub n: usize,
    pub r: usize,
    pub entries: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub im: Option<Vec<f64>>,
}

impl FactorJson {
    pub fn new(low: &LowRankSolution) -> Self {
        match low.complex_factor() {
            Some((re, im)) => Self {
                n: re.rows(),
                r: re.cols(),
                entries: re.into_vec(),
                im: Some(im.into_vec()),
            },
            None => Self {
                n: low.u.rows(),
                r: low.u.cols(),
                entries: low.u.as_slice().to_vec(),
                im: None,
            },
        }
    }

    pub fn to_mat(&self) -> Result<Mat, IoError> {
        if self.entries.len() != self.n * self.r {
            return Err(IoError::Shape(format!("factor needs {} entries, got {}", self.n * self.r, self.entries.len())));
        }
        Ok(Mat::from_vec(self.n, self.r, self.entries.clone()))
    }
}

/// JSON number for finite values; `"inf"`, `"-inf"` or `"nan"` otherwise,
/// matching the CSV spelling.
pub fn num(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(fmt_f64(x)),
    }
}

/// Shortest round-trip decimal, with `inf`, `-inf` and `nan` spelled out.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf" } else { "-inf" }.into()
    } else {
        format!("{x}")
    }
}

/// Replaces `null` (serde's encoding of non-finite floats) in the named
/// top-level fields by the spelled-out value.
pub fn patch_non_finite(v: &mut Value, fields: &[(&str, f64)]) {
    if let Value::Object(map) = v {
        for (k, x) in fields {
            if !x.is_finite() {
                map.insert((*k).to_string(), num(*x));
            }
        }
    }
}

/// `Sense` as the CLI spells it.
pub fn sense_name(s: Sense) -> &'static str {
    match s {
        Sense::Minimize => "min",
        Sense::Maximize => "max",
    }
}

pub fn field_name(f: Field) -> &'static str {
    match f {
        Field::Real => "real",
        Field::Complex => "complex",
    }
}

pub fn status_name(s: SolveStatus) -> &'static str {
    match s {
        SolveStatus::Optimal => "optimal",
        SolveStatus::Infeasible => "infeasible",
        SolveStatus::Unbounded => "unbounded",
        SolveStatus::NumericalFailure => "numericalfailure",
    }
}
