use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::SymMatrix;
use crate::math::sqrt;
use crate::sdp::{QcqpInstance, Sense};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum ExampleId {
    /// `min x1^2 + x2^2  s.t.  x2^2 >= 1,  x1^2 +/- M x1 x2 >= 1`.
    #[cfg_attr(feature = "serde", serde(rename = "m-example"))]
    MinMExample,
    /// Two indefinite `>=` constraints; relaxation value 0, QP value 3.
    #[cfg_attr(feature = "serde", serde(rename = "3.7"))]
    Example3_7,
    /// Three indefinite `<=` constraints; ratio grows like `0.382 M`.
    #[cfg_attr(feature = "serde", serde(rename = "4.3"))]
    Example4_3,
    /// Two `<=` constraints with an unbounded relaxation.
    #[cfg_attr(feature = "serde", serde(rename = "4.4"))]
    Example4_4,
}

impl ExampleId {
    pub const ALL: [ExampleId; 4] = [
        ExampleId::MinMExample,
        ExampleId::Example3_7,
        ExampleId::Example4_3,
        ExampleId::Example4_4,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExampleId::MinMExample => "m-example",
            ExampleId::Example3_7 => "3.7",
            ExampleId::Example4_3 => "4.3",
            ExampleId::Example4_4 => "4.4",
        }
    }

    pub fn parse(s: &str) -> Option<ExampleId> {
        ExampleId::ALL.into_iter().find(|id| id.name() == s.trim())
    }

    pub fn takes_parameter(self) -> bool {
        matches!(self, ExampleId::MinMExample | ExampleId::Example4_3)
    }
}

#[derive(Debug, Clone)]
pub struct CanonicalExample {
    pub id: ExampleId,
    pub parameter: Option<f64>,
    pub instance: QcqpInstance,
    /// Named analytic values.
    pub known_values: Vec<(&'static str, f64)>,
}

impl CanonicalExample {
    pub fn known(&self, name: &str) -> Option<f64> {
        self.known_values
            .iter()
            .find(|(k, _)| *k == name)
            .map(|(_, v)| *v)
    }
}

/// Feasible point of the two-indefinite example with objective `x4^2 = 3`.
pub fn example_3_7_feasible_point() -> [f64; 4] {
    [sqrt(2.0), sqrt(2.0), 0.0, sqrt(3.0)]
}

fn sym2(a: f64, b: f64, c: f64) -> SymMatrix {
    SymMatrix::from_fn(2, |i, j| match (i, j) {
        (0, 0) => a,
        (1, 1) => c,
        _ => b,
    })
}

/// Builds an example. `m` is the parameter `M > 0` where one applies and is
/// ignored otherwise. Panics if a parametrized example gets `m <= 0`.
pub fn canonical(id: ExampleId, m: Option<f64>) -> CanonicalExample {
    let param = if id.takes_parameter() {
        let m = m.unwrap_or(10.0);
        assert!(m > 0.0 && m.is_finite(), "M must be positive");
        Some(m)
    } else {
        None
    };
    let (instance, known_values) = match id {
        ExampleId::MinMExample => {
            let m = param.expect("parametrized");
            let inst = QcqpInstance::real(
                Sense::Minimize,
                SymMatrix::identity(2),
                vec![
                    SymMatrix::from_diag(&[0.0, 1.0]),
                    sym2(1.0, m / 2.0, 0.0),
                    sym2(1.0, -m / 2.0, 0.0),
                ],
            )
            .expect("well-formed");
            let root = m + sqrt(m * m + 4.0);
            (inst, vec![("v_sdp", 1.0), ("v_qp_lower", 1.0 + 0.25 * root * root)])
        }
        ExampleId::Example3_7 => {
            let mut a0 = SymMatrix::from_diag(&[0.0, 0.0, 1.0, 1.0]);
            a0.set(0, 1, 0.5);
            let mut a1 = a0.clone();
            a1.set(0, 1, -0.5);
            let inst = QcqpInstance::real(
                Sense::Minimize,
                SymMatrix::from_diag(&[0.0, 0.0, 0.0, 1.0]),
                vec![
                    a0,
                    a1,
                    SymMatrix::from_diag(&[0.5, 0.0, -1.0, 0.0]),
                    SymMatrix::from_diag(&[0.0, 0.5, -1.0, 0.0]),
                ],
            )
            .expect("well-formed");
            (inst, vec![("v_sdp", 0.0), ("v_qp_lower", 3.0)])
        }
        ExampleId::Example4_3 => {
            let m = param.expect("parametrized");
            let inst = QcqpInstance::real(
                Sense::Maximize,
                SymMatrix::from_diag(&[1.0, 1.0 / m]),
                vec![
                    sym2(0.0, m / 2.0, 1.0),
                    sym2(0.0, -m / 2.0, 1.0),
                    SymMatrix::from_diag(&[m, -m]),
                ],
            )
            .expect("well-formed");
            (
                inst,
                vec![
                    ("v_qp_upper", 2.618 / m),
                    ("v_sdp_lower", 1.0 + 1.0 / m),
                    ("v_sdp_upper", 1.0 + 2.0 / m),
                    ("ratio_lower", 0.382 * m),
                ],
            )
        }
        ExampleId::Example4_4 => {
            let inst = QcqpInstance::real(
                Sense::Maximize,
                sym2(1.0, 0.5, 0.0),
                vec![sym2(0.0, 0.5, 0.0), SymMatrix::from_diag(&[1.0, -1.0])],
            )
            .expect("well-formed");
            (inst, vec![("v_qp", example_4_4_polar_value())])
        }
    };
    CanonicalExample {
        id,
        parameter: param,
        instance,
        known_values,
    }
}

/// Objective of the polar reformulation `max (y1 + y2 + |y|)/2` with
/// `y1 <= 2, y2 <= 1`, evaluated at its maximizer.
pub fn example_4_4_polar_value() -> f64 {
    let (y1, y2) = (2.0f64, 1.0f64);
    0.5 * (y1 + y2 + sqrt(y1 * y1 + y2 * y2))
}
