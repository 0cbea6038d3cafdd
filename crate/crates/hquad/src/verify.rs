//! Numerical checks of the probability bounds, one registry entry per
//! statement.
//!
//! Every check draws its random configurations from
//! `derive_seed(root, label(<check name>), index)`, so checks can be run
//! alone or together with identical results.

use hquad_core::linalg::{herm_embed, HermMatrix, Mat, SymMatrix};
use hquad_core::probability::{
    asym_bound_generic, asym_bound_moment, asym_prob, bernoulli_moment4, chebyshev_tail, chernoff_tail, conjecture_scan,
    empirical_tail, enumerate_bernoulli, exp_closed_form, AsymmetryResult, Kind, LemmaId, Method, PairWeights,
    TailBoundParams, TailEvent,
};
use hquad_core::rng::{derive_seed, label, stream, Rng};
use hquad_core::Field;
use rand::Rng as _;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

/// Standard errors subtracted before comparing an estimate with a bound.
pub const MARGIN_SE: f64 = 3.0;
/// Agreement radius, in standard errors, between closed form and sampling.
pub const CLOSED_FORM_SE: f64 = 4.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CheckId {
    Lemma(LemmaId),
    /// Exponential tail bound and its Chebyshev alternative.
    L5_1,
    /// Hypoexponential closed form against sampling.
    ClosedForm,
    /// Grid search for the smallest tail of positive exponential sums.
    Conjecture,
}

impl CheckId {
    pub fn all() -> Vec<CheckId> {
        let mut v: Vec<CheckId> = LemmaId::ALL.iter().map(|&l| CheckId::Lemma(l)).collect();
        v.extend([CheckId::L5_1, CheckId::ClosedForm, CheckId::Conjecture]);
        v
    }

    pub fn name(self) -> &'static str {
        match self {
            CheckId::Lemma(l) => l.name(),
            CheckId::L5_1 => "L5_1",
            CheckId::ClosedForm => "closed-form",
            CheckId::Conjecture => "conjecture",
        }
    }

    pub fn parse(s: &str) -> Option<CheckId> {
        if let Some(l) = LemmaId::parse(s) {
            return Some(CheckId::Lemma(l));
        }
        match s.trim().to_ascii_lowercase().replace('.', "_").as_str() {
            "l5_1" => Some(CheckId::L5_1),
            "closed-form" | "closed_form" => Some(CheckId::ClosedForm),
            "conjecture" => Some(CheckId::Conjecture),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    /// Monte Carlo samples per configuration.
    pub samples: u64,
    pub seed: u64,
    /// Random configurations per check.
    pub configs: usize,
    /// Largest `n` in the exhaustive sign checks.
    pub exhaustive_max_n: usize,
    /// Grid step of the conjecture scan.
    pub scan_resolution: f64,
}

impl VerifyConfig {
    pub fn new(samples: u64, seed: u64) -> Self {
        Self {
            samples,
            seed,
            configs: 20,
            exhaustive_max_n: 12,
            scan_resolution: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckSummary {
    pub id: String,
    pub passed: bool,
    pub checks: usize,
    pub failures: usize,
    /// Smallest `(value - margin) - bound` over the checks (or `bound -
    /// value` for upper bounds); negative means a failure.
    pub worst_margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub root_seed: u64,
    pub samples: u64,
    pub results: Vec<AsymmetryResult>,
    pub lemmas: Vec<CheckSummary>,
    pub passed: bool,
}

struct Tally {
    id: CheckId,
    checks: usize,
    failures: usize,
    worst: f64,
    detail: String,
}

impl Tally {
    fn new(id: CheckId) -> Self {
        Self {
            id,
            checks: 0,
            failures: 0,
            worst: f64::INFINITY,
            detail: String::new(),
        }
    }

    /// Records a check whose margin must be positive.
    fn margin(&mut self, m: f64) {
        self.checks += 1;
        if !(m > 0.0) {
            self.failures += 1;
        }
        self.worst = self.worst.min(m);
    }

    /// Records a check whose margin must be nonnegative.
    fn margin_ge(&mut self, m: f64) {
        self.checks += 1;
        if !(m >= 0.0) {
            self.failures += 1;
        }
        self.worst = self.worst.min(m);
    }

    fn finish(self) -> CheckSummary {
        CheckSummary {
            id: self.id.name().into(),
            passed: self.failures == 0 && self.checks > 0,
            checks: self.checks,
            failures: self.failures,
            worst_margin: self.worst,
            detail: self.detail,
        }
    }
}

fn rng_for(cfg: &VerifyConfig, id: CheckId, i: usize) -> Rng {
    stream(derive_seed(cfg.seed, label(id.name()), i as u64), 0)
}

fn mc_seed(cfg: &VerifyConfig, id: CheckId, i: usize) -> u64 {
    derive_seed(cfg.seed, label(id.name()), (1 << 32) | i as u64)
}

fn normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Weight profile `i mod 5`: mixed Gaussian, positive, one heavy
/// coordinate, one heavy coordinate with opposite-sign dust, and two
/// equal-magnitude opposite weights.
pub fn weight_profile(rng: &mut Rng, i: usize, n: usize) -> Vec<f64> {
    match i % 5 {
        0 => (0..n).map(|_| normal(rng)).collect(),
        1 => (0..n).map(|_| rng.random::<f64>() + 1e-3).collect(),
        2 => {
            let mut v: Vec<f64> = (0..n).map(|_| 1e-3 * normal(rng)).collect();
            v[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
            v
        }
        3 => {
            let s = if rng.random::<bool>() { 1.0 } else { -1.0 };
            let mut v: Vec<f64> = (0..n).map(|_| -s * 0.05 * rng.random::<f64>()).collect();
            v[0] = s;
            v
        }
        _ => {
            let mut v = vec![0.0; n.max(2)];
            v[0] = 1.0;
            v[1] = -1.0;
            v
        }
    }
}

/// Exact sign probabilities of random Rademacher forms against the generic
/// (`L2_1`, `t = 4`) or sharpened (`L2_2`) fourth-moment bound.
fn moment_lemma(cfg: &VerifyConfig, lemma: LemmaId, results: &mut Vec<AsymmetryResult>) -> CheckSummary {
    let id = CheckId::Lemma(lemma);
    let mut t = Tally::new(id);
    for i in 0..cfg.configs {
        let mut rng = rng_for(cfg, id, i);
        let n = rng.random_range(3..=cfg.exhaustive_max_n.max(3));
        let w = PairWeights::from_fn(n, |_, _| normal(&mut rng));
        let Ok((ge, le, m4)) = enumerate_bernoulli(&w) else { continue };
        let s2 = w.sum_sq();
        let tau = m4 / (s2 * s2);
        let bound = match lemma {
            LemmaId::L2_1 => asym_bound_generic(4.0, tau),
            _ => asym_bound_moment(4.0, tau),
        }
        .expect("positive moment");
        let lo = ge.min(le);
        if lemma == LemmaId::L2_1 {
            t.margin(lo - bound);
        } else {
            t.margin_ge(lo - bound);
        }
        results.push(AsymmetryResult {
            lemma_id: lemma,
            analytic_lower_bound: bound,
            estimate: ge,
            estimate_opposite: le,
            std_error: 0.0,
            confidence_radius: 0.0,
            method: Method::Exhaustive,
            samples: 1u64 << (n - 1),
        });
    }
    if lemma == LemmaId::L2_2 {
        // The sharpened constant dominates the generic one on a grid.
        let sharp = 2.0 * 3f64.sqrt() - 3.0;
        for k in 0..1000 {
            let tau = 1.0 + k as f64;
            let a = asym_bound_moment(4.0, tau).unwrap();
            let b = asym_bound_generic(4.0, tau).unwrap();
            t.margin(a - b);
            t.margin(a - 9.0 / (20.0 * tau));
        }
        t.detail = format!("(2 sqrt 3 - 3) = {sharp}");
    }
    t.finish()
}

/// Random sign or exponential sums by Monte Carlo against the lemma's
/// constant, both tails.
fn constant_lemma(cfg: &VerifyConfig, kind: Kind, results: &mut Vec<AsymmetryResult>) -> CheckSummary {
    let id = CheckId::Lemma(kind.lemma());
    let rs: Vec<Option<AsymmetryResult>> = (0..cfg.configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg, id, i);
            let n = rng.random_range(1..=12usize);
            let w = weight_profile(&mut rng, i, n);
            asym_prob(kind, &w, Method::MonteCarlo, cfg.samples, mc_seed(cfg, id, i)).ok()
        })
        .collect();
    let mut t = Tally::new(id);
    for r in rs.into_iter().flatten() {
        t.margin(r.estimate.min(r.estimate_opposite) - MARGIN_SE * r.std_error - r.analytic_lower_bound);
        results.push(r);
    }
    t.finish()
}

/// Exhaustive Rademacher forms against `1/87`, with the fourth-moment
/// formula checked against enumeration.
fn rademacher_lemma(cfg: &VerifyConfig, results: &mut Vec<AsymmetryResult>) -> CheckSummary {
    let id = CheckId::Lemma(LemmaId::L4_1);
    let mut t = Tally::new(id);
    let mut worst_rel = 0.0f64;
    for i in 0..cfg.configs {
        let mut rng = rng_for(cfg, id, i);
        let n = rng.random_range(3..=cfg.exhaustive_max_n.max(3));
        let w = match i % 3 {
            0 => PairWeights::from_fn(n, |_, _| normal(&mut rng)),
            1 => PairWeights::from_fn(n, |a, _| if a == 0 { 1.0 } else { 0.05 * normal(&mut rng) }),
            _ => PairWeights::from_fn(n, |_, _| if rng.random::<bool>() { 1.0 } else { -1.0 }),
        };
        let r = asym_prob(Kind::Bernoulli, w.packed(), Method::Exhaustive, 0, 0);
        let Ok(r) = r else { continue };
        let (_, _, m4) = enumerate_bernoulli(&w).expect("small n");
        let f = bernoulli_moment4(&w);
        let rel = (m4 - f).abs() / f.abs().max(f64::MIN_POSITIVE);
        worst_rel = worst_rel.max(rel);
        t.margin(1e-10 - rel);
        t.margin(r.estimate.min(r.estimate_opposite) - r.analytic_lower_bound);
        results.push(r);
    }
    t.detail = format!("max relative moment error {worst_rel:e}");
    t.finish()
}

/// Complex `n x r` matrix embedded as `[[Re, -Im], [Im, Re]]`.
fn embed_rect(re: &Mat, im: &Mat) -> Mat {
    let (n, r) = (re.rows(), re.cols());
    Mat::from_fn(2 * n, 2 * r, |i, j| {
        let (bi, ii) = (i / n, i % n);
        let (bj, jj) = (j / r, j % r);
        match (bi, bj) {
            (0, 0) | (1, 1) => re[(ii, jj)],
            (0, 1) => -im[(ii, jj)],
            _ => im[(ii, jj)],
        }
    })
}

/// Eigenvalues of `Z^(1/2) A Z^(1/2)` for a random indefinite `A` and a
/// random PSD `Z = G G*` of rank `r`, with `A` negated if needed so that
/// `Tr(AZ) >= 0`.
fn random_quadratic_form(rng: &mut Rng, field: Field) -> Vec<f64> {
    let n = rng.random_range(2..=8usize);
    let r = rng.random_range(1..=n);
    let mut draw = |n: usize, c: usize| Mat::from_fn(n, c, |_, _| normal(rng));
    let ev = match field {
        Field::Real => {
            let a = SymMatrix::from_mat(&draw(n, n)).expect("square");
            let g = draw(n, r);
            a.congruence(&g).eig().expect("finite").eigenvalues
        }
        Field::Complex => {
            let (ar, ai, gr, gi) = (draw(n, n), draw(n, n), draw(n, r), draw(n, r));
            let h = HermMatrix::new(n, ar.into_vec(), ai.into_vec()).expect("square");
            let e = herm_embed(&h).congruence(&embed_rect(&gr, &gi));
            // Embedded spectra repeat every eigenvalue.
            e.eig().expect("finite").eigenvalues.into_iter().step_by(2).collect()
        }
    };
    let s: f64 = ev.iter().sum();
    if s < 0.0 {
        ev.into_iter().map(|l| -l).collect()
    } else {
        ev
    }
}

/// `Prob{xi*A xi >= gamma E(xi*A xi)}` for Gaussian `xi ~ N(0, Z)` against
/// the lemma's constant.
fn quadratic_form_lemma(cfg: &VerifyConfig, lemma: LemmaId, results: &mut Vec<AsymmetryResult>) -> CheckSummary {
    let id = CheckId::Lemma(lemma);
    let field = if lemma == LemmaId::L3_2 { Field::Real } else { Field::Complex };
    let bound = lemma.constant().expect("constant lemma");
    let rs: Vec<AsymmetryResult> = (0..cfg.configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg, id, i);
            let lambdas = random_quadratic_form(&mut rng, field);
            let gamma: f64 = if i % 4 == 0 { 1.0 } else { rng.random() };
            let mean: f64 = lambdas.iter().sum();
            let (p, se) = empirical_tail(&lambdas, TailEvent::Raw { alpha: gamma * mean }, field, cfg.samples, mc_seed(cfg, id, i))
                .expect("positive samples");
            AsymmetryResult {
                lemma_id: lemma,
                analytic_lower_bound: bound,
                estimate: p,
                estimate_opposite: p,
                std_error: se,
                confidence_radius: 1.96 * se,
                method: Method::MonteCarlo,
                samples: cfg.samples,
            }
        })
        .collect();
    let mut t = Tally::new(id);
    for r in rs {
        t.margin(r.estimate - MARGIN_SE * r.std_error - bound);
        results.push(r);
    }
    t.detail = format!("single tail: Prob{{< gamma E}} < {}", 1.0 - bound);
    t.finish()
}

/// Exponential tail and Chebyshev bounds against sampled frequencies,
/// real and complex.
fn tail_check(cfg: &VerifyConfig) -> CheckSummary {
    let id = CheckId::L5_1;
    let margins: Vec<(f64, f64)> = (0..cfg.configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg, id, i);
            let field = if i % 2 == 0 { Field::Real } else { Field::Complex };
            let n = rng.random_range(1..=8usize);
            let mut lambdas: Vec<f64> = (0..n).map(|_| normal(&mut rng)).collect();
            let alpha = 0.5 + 4.5 * rng.random::<f64>();
            let p = TailBoundParams::new(lambdas.clone(), alpha, field).expect("finite");
            let seed = mc_seed(cfg, id, i);
            let (f, se) = empirical_tail(&lambdas, TailEvent::Centered { alpha }, field, cfg.samples, seed).expect("samples");
            let chern = chernoff_tail(&p).map(|b| b - (f - MARGIN_SE * se)).unwrap_or(f64::INFINITY);
            // Chebyshev needs sum lambda <= 1 < alpha.
            let s: f64 = lambdas.iter().sum();
            if s > 1.0 {
                let target = rng.random::<f64>();
                lambdas.iter_mut().for_each(|l| *l *= target / s);
            }
            let alpha = 1.2 + 4.8 * rng.random::<f64>();
            let (f, se) = empirical_tail(&lambdas, TailEvent::Raw { alpha }, field, cfg.samples, seed ^ 1).expect("samples");
            let cheb = chebyshev_tail(&lambdas, alpha).expect("alpha > 1") - (f - MARGIN_SE * se);
            (chern, cheb)
        })
        .collect();
    let mut t = Tally::new(id);
    for (a, b) in margins {
        t.margin_ge(a);
        t.margin_ge(b);
    }
    t.finish()
}

/// Random distinct positive weights.
pub fn distinct_positive(rng: &mut Rng, n: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| 0.05 + rng.random::<f64>()).collect();
        if exp_closed_form(&v).is_ok() {
            return v;
        }
    }
}

fn closed_form_check(cfg: &VerifyConfig, results: &mut Vec<AsymmetryResult>) -> CheckSummary {
    let id = CheckId::ClosedForm;
    let rs: Vec<(AsymmetryResult, AsymmetryResult)> = (0..cfg.configs)
        .into_par_iter()
        .map(|i| {
            let mut rng = rng_for(cfg, id, i);
            let n = rng.random_range(2..=6usize);
            let tau = distinct_positive(&mut rng, n);
            let cf = asym_prob(Kind::Exp, &tau, Method::ClosedForm, 0, 0).expect("distinct");
            let mc = asym_prob(Kind::Exp, &tau, Method::MonteCarlo, cfg.samples, mc_seed(cfg, id, i)).expect("samples");
            (cf, mc)
        })
        .collect();
    let mut t = Tally::new(id);
    for (cf, mc) in rs {
        t.margin(CLOSED_FORM_SE * mc.std_error - (cf.estimate - mc.estimate).abs());
        t.margin(cf.estimate - 1.0 / 20.0);
        t.margin(19.0 / 20.0 - cf.estimate);
        results.push(cf);
        results.push(mc);
    }
    t.finish()
}

fn conjecture_check(cfg: &VerifyConfig) -> CheckSummary {
    let id = CheckId::Conjecture;
    let mut t = Tally::new(id);
    let e = (-1f64).exp();
    let mut detail = Vec::new();
    for n in [2, 3] {
        let mixed = Some((cfg.configs, cfg.samples, derive_seed(cfg.seed, label("conjecture"), n as u64)));
        let s = conjecture_scan(n, cfg.scan_resolution, mixed).expect("valid scan");
        t.margin(s.min_found - e);
        t.margin(1.0 - e - s.max_found);
        detail.push(format!(
            "n={n}: min {:.9} at {:?}, max {:.9}, {} points; mixed signs (sampled) {:?}..{:?}",
            s.min_found, s.argmin, s.max_found, s.points, s.mixed_min, s.mixed_max
        ));
    }
    t.detail = detail.join("; ");
    t.finish()
}

/// Runs the selected checks in registry order.
pub fn run(ids: &[CheckId], cfg: &VerifyConfig) -> VerifyReport {
    let mut results = Vec::new();
    let mut lemmas = Vec::new();
    for id in CheckId::all() {
        if !ids.contains(&id) {
            continue;
        }
        let s = match id {
            CheckId::Lemma(l @ (LemmaId::L2_1 | LemmaId::L2_2)) => moment_lemma(cfg, l, &mut results),
            CheckId::Lemma(LemmaId::L3_1) => constant_lemma(cfg, Kind::ChiSq, &mut results),
            CheckId::Lemma(LemmaId::L3_4) => constant_lemma(cfg, Kind::Exp, &mut results),
            CheckId::Lemma(l @ (LemmaId::L3_2 | LemmaId::L3_5)) => quadratic_form_lemma(cfg, l, &mut results),
            CheckId::Lemma(LemmaId::L4_1) => rademacher_lemma(cfg, &mut results),
            CheckId::L5_1 => tail_check(cfg),
            CheckId::ClosedForm => closed_form_check(cfg, &mut results),
            CheckId::Conjecture => conjecture_check(cfg),
        };
        lemmas.push(s);
    }
    let passed = !lemmas.is_empty() && lemmas.iter().all(|l| l.passed);
    VerifyReport {
        root_seed: cfg.seed,
        samples: cfg.samples,
        results,
        lemmas,
        passed,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_round_trip() {
        for id in CheckId::all() {
            assert_eq!(CheckId::parse(id.name()), Some(id));
        }
        assert_eq!(CheckId::parse("l3.1"), Some(CheckId::Lemma(LemmaId::L3_1)));
        assert_eq!(CheckId::parse("L9_9"), None);
    }

    #[test]
    fn quadratic_forms_have_nonnegative_mean() {
        for field in [Field::Real, Field::Complex] {
            let mut rng = stream(5, 0);
            for _ in 0..20 {
                let ev = random_quadratic_form(&mut rng, field);
                assert!(ev.iter().sum::<f64>() >= 0.0);
            }
        }
    }
}
