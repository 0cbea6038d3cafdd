//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use hquad::experiment::{self, instance_seed, ExperimentConfig, RecordStatus};
use hquad::pipeline::{round_solution, PipelineError};
use hquad::verify::{self, CheckId, VerifyConfig};
use hquad_core::instances::{
    brute_force_qcqp, canonical, example_3_7_feasible_point, example_4_4_polar_value, generate,
    Case, ExampleId, GeneratorSpec,
};
use hquad_core::probability::{asym_bound_generic, asym_bound_moment, conjecture_scan, LemmaId};
use hquad_core::rng::{derive_seed, label};
use hquad_core::rounding::{bound_certificate_max, RoundingError, RoundingParams, Scheme};
use hquad_core::sdp::solve;
use hquad_core::{Field, Sense, SolveStatus};

const ROOT: u64 = 20080101;

struct Suite {
    lines: Vec<(bool, String)>,
}

impl Suite {
    fn check(&mut self, name: &str, pass: bool, detail: String) {
        println!("{} {name}: {detail}", if pass { "PASS" } else { "FAIL" });
        self.lines.push((pass, name.to_string()));
    }
}

fn secs(d: Duration) -> f64 {
    d.as_secs_f64()
}

fn rounding_seed(seed: u64) -> u64 {
    derive_seed(seed, label("rounding"), 0)
}

fn example_3_7(s: &mut Suite) {
    let t = Instant::now();
    let ex = canonical(ExampleId::Example3_7, None);
    let sol = solve(&ex.instance).expect("solver runs");
    let pt = example_3_7_feasible_point();
    let feasible = ex.instance.is_feasible(&pt, 1e-12);
    let obj = ex.instance.objective_at(&pt);
    let params = RoundingParams::new(Scheme::GaussianMin, 100, ROOT);
    let ratio = match round_solution(&ex.instance, sol.clone(), &params) {
        Ok(out) => out.report.empirical_ratio,
        Err(PipelineError::Rounding(RoundingError::NoFeasibleSample(r))) => r.empirical_ratio,
        Err(e) => panic!("example 3.7 rounding: {e}"),
    };
    let el = secs(t.elapsed());
    s.check(
        "example-3.7",
        sol.status == SolveStatus::Optimal
            && sol.objective_value.abs() <= 1e-7
            && feasible
            && (obj - 3.0).abs() <= 1e-12
            && ratio == f64::INFINITY
            && el < 1.0,
        format!(
            "v_sdp = {:e}, point {pt:?} feasible = {feasible} with objective {obj}, reported ratio {ratio}, {el:.3} s",
            sol.objective_value
        ),
    );
}

fn m_example(s: &mut Suite) {
    for m in [1.0, 10.0, 100.0] {
        let ex = canonical(ExampleId::MinMExample, Some(m));
        let sol = solve(&ex.instance).expect("solver runs");
        s.check(
            &format!("m-example M={m} v_sdp"),
            sol.status == SolveStatus::Optimal && (sol.objective_value - 1.0).abs() <= 1e-6,
            format!("v_sdp = {} (want 1 +- 1e-6), status {:?}", sol.objective_value, sol.status),
        );
        let lower = ex.known("v_qp_lower").expect("known");
        let mut worst = f64::INFINITY;
        let mut feasible = 0;
        for k in 0..20u64 {
            let params = RoundingParams::new(Scheme::GaussianMin, 100, derive_seed(ROOT, label("m-example"), k));
            if let Ok(out) = round_solution(&ex.instance, sol.clone(), &params) {
                // Every feasible sample has objective at least the best one.
                worst = worst.min(out.report.best_objective);
                feasible += out.report.samples_feasible;
            }
        }
        s.check(
            &format!("m-example M={m} rounded"),
            feasible > 0 && worst >= lower - 1e-4,
            format!("smallest rounded objective {worst} over {feasible} feasible samples, bound {lower}"),
        );
    }
}

fn example_4_3(s: &mut Suite) {
    for m in [10.0, 100.0] {
        let t = Instant::now();
        let ex = canonical(ExampleId::Example4_3, Some(m));
        let sol = solve(&ex.instance).expect("solver runs");
        let v = sol.objective_value;
        let qp = brute_force_qcqp(&ex.instance, 720).expect("n = 2").value().expect("bounded");
        let ratio = v / qp;
        let el = secs(t.elapsed());
        s.check(
            &format!("example-4.3 M={m}"),
            sol.status == SolveStatus::Optimal
                && v >= 1.0 + 1.0 / m - 1e-6
                && v <= 1.0 + 2.0 / m + 1e-6
                && qp <= 2.618 / m + 1e-3
                && ratio >= 0.38 * m
                && el < 5.0,
            format!("v_sdp = {v}, brute-force v_qp = {qp}, ratio {ratio} (>= {}), {el:.3} s", 0.38 * m),
        );
    }
}

fn example_4_4(s: &mut Suite) {
    let ex = canonical(ExampleId::Example4_4, None);
    let sol = solve(&ex.instance).expect("solver runs");
    let want = 0.5 * (3.0 + 5f64.sqrt());
    let bf = brute_force_qcqp(&ex.instance, 720).expect("n = 2").value().expect("bounded");
    let polar = example_4_4_polar_value();
    s.check(
        "example-4.4",
        sol.status == SolveStatus::Unbounded
            && sol.ray.is_some()
            && (bf - want).abs() <= 1e-4
            && (polar - want).abs() <= 1e-4,
        format!(
            "status {:?}, ray {}, brute force {bf}, polar {polar}, want {want}",
            sol.status,
            if sol.ray.is_some() { "present" } else { "missing" }
        ),
    );
}

fn lemma_line(s: &mut Suite, name: &str, ids: &[CheckId], cfg: &VerifyConfig, limit: Option<f64>) {
    let t = Instant::now();
    let rep = verify::run(ids, cfg);
    let el = secs(t.elapsed());
    let detail: Vec<String> = rep
        .lemmas
        .iter()
        .map(|l| format!("{} {}/{} failed, worst margin {:e} {}", l.id, l.failures, l.checks, l.worst_margin, l.detail))
        .collect();
    let in_time = limit.is_none_or(|lim| el < lim);
    s.check(name, rep.passed && in_time, format!("{}; {el:.1} s", detail.join("; ")));
}

fn lemma_suite(s: &mut Suite) {
    let mut cfg = VerifyConfig::new(1_000_000, ROOT);

    cfg.configs = 500;
    cfg.exhaustive_max_n = 12;
    lemma_line(s, "L4_1 exhaustive", &[CheckId::Lemma(LemmaId::L4_1)], &cfg, Some(60.0));

    cfg.configs = 200;
    lemma_line(s, "L3_1 monte-carlo", &[CheckId::Lemma(LemmaId::L3_1)], &cfg, None);
    lemma_line(s, "L3_4 monte-carlo", &[CheckId::Lemma(LemmaId::L3_4)], &cfg, None);

    let mut worst = f64::INFINITY;
    for k in 0..10_000 {
        let tau = 1.0 + 0.1 * k as f64;
        let sharp = asym_bound_moment(4.0, tau).expect("tau > 0");
        let generic = asym_bound_generic(4.0, tau).expect("tau > 0");
        worst = worst.min(sharp - generic);
    }
    let sharp_ok = worst > 0.0;
    cfg.configs = 100;
    let rep = verify::run(&[CheckId::Lemma(LemmaId::L2_1), CheckId::Lemma(LemmaId::L2_2)], &cfg);
    s.check(
        "L2_2 sharpens L2_1",
        sharp_ok && rep.passed,
        format!(
            "grid tau in [1, 1000.9]: min gap {worst:e}; exhaustive sign checks {}",
            rep.lemmas.iter().map(|l| format!("{} {}/{} failed", l.id, l.failures, l.checks)).collect::<Vec<_>>().join(", ")
        ),
    );

    cfg.configs = 50;
    lemma_line(s, "L5_1 tail bounds", &[CheckId::L5_1], &cfg, None);

    cfg.configs = 100;
    lemma_line(s, "closed-form vs monte-carlo", &[CheckId::ClosedForm], &cfg, None);

    let e = (-1f64).exp();
    let mut mins = Vec::new();
    for n in [2, 3] {
        let scan = conjecture_scan(n, 1e-3, None).expect("valid scan");
        mins.push((n, scan.min_found, scan.points));
    }
    s.check(
        "conjecture scan",
        mins.iter().all(|&(_, v, _)| v > e),
        format!(
            "{} (1/e = {e})",
            mins.iter().map(|(n, v, p)| format!("n={n}: min {v} over {p} points")).collect::<Vec<_>>().join(", ")
        ),
    );
}

fn desk_ratios(s: &mut Suite) {
    let t = Instant::now();
    let cfg = ExperimentConfig::desk(ROOT);
    let rows = experiment::run(&cfg);
    let summary = experiment::summarize(&rows);
    let dir = std::path::PathBuf::from(env!("CARGO_TARGET_TMPDIR"));
    let out = dir.join("acceptance_desk.csv");
    experiment::write_csv(&rows, std::fs::File::create(&out).expect("csv")).expect("csv");
    experiment::write_summary(&summary, ROOT, std::fs::File::create(experiment::summary_path(&out)).expect("csv"))
        .expect("csv");
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| {
            let b = 1e6 * (r.m * r.m) as f64 / std::f64::consts::PI;
            !(r.status == RecordStatus::Optimal && r.empirical_ratio.is_finite() && r.empirical_ratio <= b)
        })
        .map(|r| format!("m={} seed {} {} ratio {}", r.m, r.instance_seed, r.status.name(), r.empirical_ratio))
        .collect();
    let means: Vec<String> = summary.iter().map(|r| format!("m={}: {:.6}", r.m, r.mean_ratio)).collect();
    let el = secs(t.elapsed());
    s.check(
        "desk case (a) min-form ratios",
        bad.is_empty() && rows.len() == 600 && el < 600.0,
        format!(
            "{} rows, {} violations {:?}; mean ratio {}; csv {}; {el:.1} s",
            rows.len(),
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>(),
            means.join(", "),
            out.display()
        ),
    );
}

fn max_form(s: &mut Suite) {
    let mut count = 0;
    let mut bad = Vec::new();
    let mut worst_sign = f64::INFINITY;
    let mut worst_cert = f64::INFINITY;
    for m in [5usize, 10, 20] {
        for i in 0..30 {
            let seed = instance_seed(ROOT ^ 0x5, Case::A, m, i);
            let g = generate(&GeneratorSpec::new(Case::A, 10, m, Sense::Maximize, Field::Real, seed)).expect("draw");
            let sol = solve(&g.instance).expect("solver runs");
            let cert = bound_certificate_max(&g.instance, &sol.x);
            let params = RoundingParams::new(Scheme::SignMax, 100, rounding_seed(seed));
            match round_solution(&g.instance, sol, &params) {
                Ok(out) => {
                    count += 1;
                    let r = out.report.empirical_ratio;
                    worst_sign = worst_sign.min(out.report.theoretical_bound - r);
                    worst_cert = worst_cert.min(cert.bound - r);
                    if !(out.report.bound_applicable && r <= out.report.theoretical_bound && r <= cert.bound) {
                        bad.push(format!("m={m} i={i} ratio {r} sign {} cert {}", out.report.theoretical_bound, cert.bound));
                    }
                }
                Err(e) => bad.push(format!("m={m} i={i}: {e}")),
            }
        }
    }
    s.check(
        "max-form sign rounding",
        bad.is_empty() && count == 90,
        format!(
            "{count} instances, {} violations {:?}; min slack to 2 ln(174 m mu) {worst_sign}, to certificate {worst_cert}",
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>()
        ),
    );
}

fn complex_min(s: &mut Suite) {
    let t = Instant::now();
    let mut cfg = ExperimentConfig::desk(ROOT);
    cfg.field = Field::Complex;
    cfg.m_list = (4..=10).collect();
    cfg.instances_per_m = 50;
    let rows = experiment::run(&cfg);
    let bad: Vec<String> = rows
        .iter()
        .filter(|r| !(r.status == RecordStatus::Optimal && r.empirical_ratio <= 2400.0 * r.m as f64))
        .map(|r| format!("m={} seed {} {} ratio {}", r.m, r.instance_seed, r.status.name(), r.empirical_ratio))
        .collect();
    let worst = rows.iter().map(|r| r.empirical_ratio / r.m as f64).fold(0.0, f64::max);
    s.check(
        "complex min-form m=4..10",
        bad.is_empty() && rows.len() == 350,
        format!(
            "{} rows, {} violations {:?}; max ratio/m {worst}; {:.1} s",
            rows.len(),
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>(),
            secs(t.elapsed())
        ),
    );

    let t = Instant::now();
    cfg.m_list = (1..=3).collect();
    cfg.instances_per_m = 20;
    let rows = experiment::run(&cfg);
    let exact: Vec<_> = rows.iter().filter(|r| r.v_sdp.is_finite()).collect();
    let bad: Vec<String> = exact
        .iter()
        .filter(|r| !((r.empirical_ratio - 1.0).abs() <= 1e-4))
        .map(|r| format!("m={} seed {} {} ratio {}", r.m, r.instance_seed, r.status.name(), r.empirical_ratio))
        .collect();
    let dev = exact.iter().map(|r| (r.empirical_ratio - 1.0).abs()).fold(0.0, f64::max);
    s.check(
        "complex min-form m<=3 exact",
        bad.is_empty() && !exact.is_empty(),
        format!(
            "{} of {} rows with finite v_sdp, {} off by more than 1e-4 {:?}; max |ratio - 1| {dev:e}; {:.1} s",
            exact.len(),
            rows.len(),
            bad.len(),
            bad.iter().take(3).collect::<Vec<_>>(),
            secs(t.elapsed())
        ),
    );
}

fn joint_events(s: &mut Suite) {
    const N: usize = 100_000;
    let se = |p: f64| (p * (1.0 - p) / N as f64).sqrt();
    for (name, sense, scheme, floor) in [
        ("joint event min-form", Sense::Minimize, Scheme::GaussianMin, 1.0 / 500.0),
        ("joint event max-form", Sense::Maximize, Scheme::GaussianMax, 1.0 / 100.0),
    ] {
        let t = Instant::now();
        let mut lowest = f64::INFINITY;
        let mut bad = Vec::new();
        for i in 0..50 {
            let seed = instance_seed(ROOT ^ 0x4, Case::A, 10, i);
            let g = generate(&GeneratorSpec::new(Case::A, 10, 10, sense, Field::Real, seed)).expect("draw");
            let sol = solve(&g.instance).expect("solver runs");
            let params = RoundingParams::new(scheme, N, rounding_seed(seed));
            match round_solution(&g.instance, sol, &params) {
                Ok(out) => {
                    let p = out.report.joint_event_frequency();
                    let m = p + 3.0 * se(p) - floor;
                    lowest = lowest.min(p);
                    if !(m > 0.0) {
                        bad.push(format!("i={i} frequency {p}"));
                    }
                }
                Err(e) => bad.push(format!("i={i}: {e}")),
            }
        }
        s.check(
            name,
            bad.is_empty(),
            format!(
                "50 instances x {N} samples, lowest frequency {lowest} (floor {floor}), {} failures {:?}; {:.1} s",
                bad.len(),
                bad.iter().take(3).collect::<Vec<_>>(),
                secs(t.elapsed())
            ),
        );
    }
}

fn solver_health(s: &mut Suite) {
    let t = Instant::now();
    let tol = 1e-7;
    let (mut total, mut healthy, mut optimal, mut sandwich) = (0, 0, 0, 0);
    let mut broken = Vec::new();
    for i in 0..500usize {
        let case = Case::ALL[i % 4];
        // Rank-one constraint families leave the maximization unbounded.
        let sense = if (i / 4) % 2 == 0 || matches!(case, Case::C | Case::D) { Sense::Minimize } else { Sense::Maximize };
        let m = [5, 10, 15, 20, 25][(i / 8) % 5];
        let seed = instance_seed(ROOT ^ 0x3, case, m, i);
        let g = generate(&GeneratorSpec::new(case, 10, m, sense, Field::Real, seed)).expect("draw");
        total += 1;
        let sol = solve(&g.instance).expect("solver runs");
        if sol.status != SolveStatus::Optimal {
            continue;
        }
        optimal += 1;
        if sol.gap <= tol && sol.primal_residual <= tol && sol.dual_residual <= tol {
            healthy += 1;
        }
        let (p, d) = (sol.objective_value, sol.dual_objective);
        let slack = 1e-6 * (1.0 + p.abs() + d.abs());
        // The dual value bounds the relaxation, which bounds every feasible point.
        let mut ok = match sense {
            Sense::Minimize => d <= p + slack,
            Sense::Maximize => d >= p - slack,
        };
        let params = RoundingParams::new(Scheme::default_for(sense), 20, rounding_seed(seed));
        if let Ok(out) = round_solution(&g.instance, sol, &params) {
            let v = out.report.best_objective;
            ok &= match sense {
                Sense::Minimize => v >= d - slack && v >= p - slack,
                Sense::Maximize => v <= d + slack && v <= p + slack,
            };
        }
        if ok {
            sandwich += 1;
        } else {
            broken.push(format!("{} {:?} m={m} seed {seed}", case.name(), sense));
        }
    }
    let frac = healthy as f64 / total as f64;
    s.check(
        "solver health",
        frac >= 0.99,
        format!("{healthy}/{total} optimal with gap and residuals <= {tol}; {:.1} s", secs(t.elapsed())),
    );
    s.check(
        "weak-duality sandwich",
        sandwich == optimal && optimal > 0,
        format!("{sandwich}/{optimal} optimal results consistent {:?}", broken.iter().take(3).collect::<Vec<_>>()),
    );
}

fn main() -> ExitCode {
    let mut s = Suite { lines: Vec::new() };
    let t = Instant::now();
    example_3_7(&mut s);
    m_example(&mut s);
    example_4_3(&mut s);
    example_4_4(&mut s);
    lemma_suite(&mut s);
    desk_ratios(&mut s);
    max_form(&mut s);
    complex_min(&mut s);
    joint_events(&mut s);
    solver_health(&mut s);
    let failed: Vec<&str> = s.lines.iter().filter(|(p, _)| !p).map(|(_, n)| n.as_str()).collect();
    println!(
        "acceptance: {} passed, {} failed in {:.1} s{}",
        s.lines.len() - failed.len(),
        failed.len(),
        secs(t.elapsed()),
        if failed.is_empty() { String::new() } else { format!(" ({})", failed.join(", ")) }
    );
    if failed.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
