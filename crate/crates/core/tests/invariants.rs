use hquad_core::instances::{generate, Case, GeneratorSpec};
use hquad_core::linalg::{herm_embed, trace_inner};
use hquad_core::probability::{
    bernoulli_moment4, chi2_moment4, enumerate_bernoulli, exp_closed_form, exp_moment4, PairWeights,
};
use hquad_core::rank::{rank_bound, reduce_rank};
use hquad_core::rounding::{round, RoundingParams, Scheme};
use hquad_core::sdp::solve;
use hquad_core::{Field, HermMatrix, Sense, SolveStatus, SymMatrix};
use proptest::prelude::*;

fn sym(n: usize) -> impl Strategy<Value = SymMatrix> {
    prop::collection::vec(-5.0f64..5.0, n * n).prop_map(move |v| SymMatrix::from_fn(n, |i, j| 0.5 * (v[i * n + j] + v[j * n + i])))
}

fn sym_any() -> impl Strategy<Value = SymMatrix> {
    (1usize..7).prop_flat_map(sym)
}

fn herm(n: usize) -> impl Strategy<Value = HermMatrix> {
    (prop::collection::vec(-3.0f64..3.0, n * n), prop::collection::vec(-3.0f64..3.0, n * n)).prop_map(move |(a, b)| {
        let re = (0..n * n).map(|k| 0.5 * (a[k] + a[(k % n) * n + k / n])).collect();
        let im = (0..n * n).map(|k| 0.5 * (b[k] - b[(k % n) * n + k / n])).collect();
        HermMatrix::new(n, re, im).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eig_reconstructs(a in sym_any()) {
        let s = a.eig().unwrap();
        let back = s.reconstruct();
        prop_assert!(back.sub(&a).frobenius_norm() <= 1e-10 * a.frobenius_norm().max(1.0));
        prop_assert!(s.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn frobenius_matches_spectrum(a in sym_any()) {
        let s = a.eig().unwrap();
        let sq: f64 = s.eigenvalues.iter().map(|l| l * l).sum();
        let f = a.frobenius_norm();
        prop_assert!((f * f - sq).abs() <= 1e-10 * sq.max(1.0));
    }

    #[test]
    fn trace_inner_is_quad_form(a in (1usize..7).prop_flat_map(|n| (sym(n), prop::collection::vec(-2.0f64..2.0, n)))) {
        let (a, x) = a;
        let xx = SymMatrix::from_fn(a.n(), |i, j| x[i] * x[j]);
        let t = trace_inner(&a, &xx).unwrap();
        prop_assert!((t - a.quad_form(&x)).abs() <= 1e-10 * (1.0 + t.abs()));
    }

    #[test]
    fn embedding_doubles_spectrum(h in (1usize..5).prop_flat_map(herm)) {
        let e = herm_embed(&h);
        prop_assert!((e.trace() - 2.0 * h.trace()).abs() < 1e-12);
        let ev = e.eig().unwrap().eigenvalues;
        for pair in ev.chunks(2) {
            prop_assert!((pair[0] - pair[1]).abs() < 1e-8 * (1.0 + pair[0].abs()));
        }
    }

    #[test]
    fn embedding_preserves_psd(h in (1usize..5).prop_flat_map(herm)) {
        // H^2 is Hermitian PSD, so its embedding is PSD.
        let e = herm_embed(&h);
        let sq = SymMatrix::from_mat(&e.to_mat().matmul(&e.to_mat())).unwrap();
        let lo = sq.min_eigenvalue().unwrap();
        prop_assert!(lo >= -1e-9 * sq.frobenius_norm().max(1.0));
    }

    #[test]
    fn bernoulli_moment_matches_enumeration(n in 2usize..9, seed in any::<u64>()) {
        let mut s = seed;
        let w = PairWeights::from_fn(n, |_, _| {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((s >> 11) as f64 / (1u64 << 53) as f64) * 2.0 - 1.0
        });
        let (ge, le, m4) = enumerate_bernoulli(&w).unwrap();
        let f = bernoulli_moment4(&w);
        prop_assert!((m4 - f).abs() <= 1e-9 * f.max(1.0));
        prop_assert!(ge + le >= 1.0 - 1e-12);
        let s2 = w.sum_sq();
        prop_assert!(f <= 15.0 * s2 * s2 * (1.0 + 1e-12));
    }

    #[test]
    fn normalized_fourth_moments(taus in prop::collection::vec(-3.0f64..3.0, 1..12)) {
        let s2: f64 = taus.iter().map(|t| t * t).sum();
        prop_assume!(s2 > 1e-6);
        prop_assert!(chi2_moment4(&taus) / (4.0 * s2 * s2) <= 15.0 + 1e-12);
        prop_assert!(exp_moment4(&taus) / (s2 * s2) <= 9.0 + 1e-12);
        prop_assert!(chi2_moment4(&taus) / (4.0 * s2 * s2) >= 3.0 - 1e-12);
    }

    #[test]
    fn closed_form_within_conjectured_range(taus in prop::collection::vec(0.01f64..1.0, 2..4)) {
        if let Ok(p) = exp_closed_form(&taus) {
            let e = (-1.0f64).exp();
            prop_assert!(p > e && p < 1.0 - e, "{p} at {taus:?}");
        }
    }
}

fn round_case(case: Case, sense: Sense, field: Field, seed: u64) -> Option<(hquad_core::QcqpInstance, f64, hquad_core::rounding::RoundingReport)> {
    let g = generate(&GeneratorSpec::new(case, 5, 3, sense, field, seed)).ok()?;
    let inst = g.instance;
    let sol = solve(&inst).ok()?;
    if sol.status != SolveStatus::Optimal {
        return None;
    }
    let low = reduce_rank(&sol, &inst, seed).unwrap();
    let p = RoundingParams::new(Scheme::default_for(sense), 40, seed ^ 7);
    let rep = round(&inst, &sol, &low, &p).ok()?;
    let again = round(&inst, &sol, &low, &p).ok()?;
    assert_eq!(rep, again);
    Some((inst, sol.objective_value, rep))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn rounding_is_feasible_deterministic_and_sandwiched(
        seed in any::<u64>(),
        case in prop::sample::select(Case::ALL.to_vec()),
        sense in prop::sample::select(vec![Sense::Minimize, Sense::Maximize]),
        field in prop::sample::select(vec![Field::Real, Field::Complex]),
    ) {
        let Some((inst, v_sdp, rep)) = round_case(case, sense, field, seed) else {
            return Ok(());
        };
        prop_assert!(inst.is_feasible(&rep.best_x, 1e-9));
        let scale = 1e-6 * v_sdp.abs().max(1.0);
        match sense {
            Sense::Minimize => prop_assert!(rep.best_objective >= v_sdp - scale),
            Sense::Maximize => prop_assert!(rep.best_objective <= v_sdp + scale),
        }
        prop_assert!(rep.empirical_ratio >= 1.0 - 1e-6);
        prop_assert!(rep.samples_feasible + rep.samples_discarded == rep.samples);
    }

    #[test]
    fn rank_reduction_keeps_values(
        seed in any::<u64>(),
        n in 4usize..9,
        m in 1usize..6,
        field in prop::sample::select(vec![Field::Real, Field::Complex]),
    ) {
        let g = generate(&GeneratorSpec::new(Case::A, n, m, Sense::Minimize, field, seed)).unwrap();
        let inst = g.instance;
        let sol = solve(&inst).unwrap();
        prop_assume!(sol.status == SolveStatus::Optimal);
        let low = reduce_rank(&sol, &inst, seed).unwrap();
        prop_assert!(low.rank <= rank_bound(m + 1, field));
        prop_assert!(low.bound_met);
        let tol = 1e-6 * sol.objective_value.abs().max(1.0);
        prop_assert!((low.objective_value - sol.objective_value).abs() <= tol);
        for (a, b) in inst.relaxed_values(&low.x).iter().zip(inst.relaxed_values(&sol.x)) {
            prop_assert!(*a >= 1.0 - 1e-6 || (a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
        prop_assert!(low.x.min_eigenvalue().unwrap() >= -1e-8 * low.x.frobenius_norm().max(1.0));
        prop_assert_eq!(low.u.cols(), match field {
            Field::Real => low.rank,
            Field::Complex => 2 * low.rank,
        });
    }
}
