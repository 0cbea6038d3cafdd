use hquad_core::instances::{canonical, ExampleId};
use hquad_core::sdp::{slater_check, solve};
use hquad_core::SolveStatus;

#[test]
fn example_3_7_relaxation_value_zero() {
    let ex = canonical(ExampleId::Example3_7, None);
    let sol = solve(&ex.instance).unwrap();
    assert_eq!(sol.status, SolveStatus::Optimal);
    assert!(sol.objective_value.abs() < 1e-7);
}

#[test]
fn m_example_relaxation() {
    for m in [1.0, 10.0, 100.0] {
        let ex = canonical(ExampleId::MinMExample, Some(m));
        let sol = solve(&ex.instance).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
    }
}

#[test]
fn example_4_3_relaxation() {
    for m in [10.0, 100.0] {
        let ex = canonical(ExampleId::Example4_3, Some(m));
        let sol = solve(&ex.instance).unwrap();
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.objective_value >= 1.0 + 1.0 / m - 1e-6);
        assert!(sol.objective_value <= 1.0 + 2.0 / m + 1e-6);
        let rep = slater_check(&ex.instance).unwrap();
        assert_eq!(rep.dual_slater, Some(true));
    }
}

#[test]
fn example_4_4_unbounded() {
    let ex = canonical(ExampleId::Example4_4, None);
    let sol = solve(&ex.instance).unwrap();
    assert_eq!(sol.status, SolveStatus::Unbounded);
    let rep = slater_check(&ex.instance).unwrap();
    assert_eq!(rep.dual_slater, Some(false));
}
