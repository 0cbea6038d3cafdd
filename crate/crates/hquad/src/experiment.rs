//! Random-instance sweeps: one CSV row per instance plus per-`(case, m)`
//! summaries.
//!
//! Instance `i` of case `c` at size `m` is drawn with seed
//! `derive_seed(root, label("instance"), c << 40 | m << 20 | i)` and rounded
//! with `derive_seed(instance_seed, label("rounding"), 0)`, so every row can
//! be regenerated on its own and the output does not depend on thread count.

use std::io::Write;

use hquad_core::instances::{generate, Case, GeneratorSpec};
use hquad_core::rng::{derive_seed, label};
use hquad_core::rounding::{RoundingError, RoundingParams, Scheme, DEFAULT_SAMPLES};
use hquad_core::{Field, Sense, SolveStatus};
use rayon::prelude::*;
use serde::Serialize;

use crate::io::fmt_f64;
use crate::pipeline::{solve_and_round, PipelineError};

pub const CSV_HEADER: [&str; 8] = ["case", "m", "instance_seed", "status", "v_sdp", "v_hat_qp", "ratio", "bound"];
pub const SUMMARY_HEADER: [&str; 8] = ["root_seed", "case", "m", "instances", "finite", "min_ratio", "mean_ratio", "max_ratio"];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub cases: Vec<Case>,
    pub m_list: Vec<usize>,
    pub instances_per_m: usize,
    pub samples: usize,
    pub seed: u64,
    pub n: usize,
    pub sense: Sense,
    pub field: Field,
    pub scheme: Scheme,
}

impl ExperimentConfig {
    /// Case (a), `m = 5..30`, 100 instances of size 10, 100 samples each.
    pub fn desk(seed: u64) -> Self {
        Self {
            cases: vec![Case::A],
            m_list: (1..=6).map(|k| 5 * k).collect(),
            instances_per_m: 100,
            samples: DEFAULT_SAMPLES,
            seed,
            n: 10,
            sense: Sense::Minimize,
            field: Field::Real,
            scheme: Scheme::GaussianMin,
        }
    }

    /// All four cases, `m = 5..100`, 1000 instances per size.
    pub fn full_scale(seed: u64) -> Self {
        Self {
            cases: Case::ALL.to_vec(),
            m_list: (1..=20).map(|k| 5 * k).collect(),
            instances_per_m: 1000,
            ..Self::desk(seed)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RecordStatus {
    Optimal,
    Infeasible,
    Unbounded,
    NumericalFailure,
    NoFeasibleSample,
    Error,
}

impl RecordStatus {
    pub fn name(self) -> &'static str {
        match self {
            RecordStatus::Optimal => "optimal",
            RecordStatus::Infeasible => "infeasible",
            RecordStatus::Unbounded => "unbounded",
            RecordStatus::NumericalFailure => "numerical_failure",
            RecordStatus::NoFeasibleSample => "no_feasible_sample",
            RecordStatus::Error => "error",
        }
    }

    fn from_solve(s: SolveStatus) -> Self {
        match s {
            SolveStatus::Optimal => RecordStatus::Optimal,
            SolveStatus::Infeasible => RecordStatus::Infeasible,
            SolveStatus::Unbounded => RecordStatus::Unbounded,
            SolveStatus::NumericalFailure => RecordStatus::NumericalFailure,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentRecord {
    pub case: Case,
    pub m: usize,
    pub instance_seed: u64,
    pub status: RecordStatus,
    pub v_sdp: f64,
    pub v_hat_qp: f64,
    pub empirical_ratio: f64,
    pub theoretical_bound: f64,
}

impl ExperimentRecord {
    fn csv_row(&self) -> [String; 8] {
        [
            self.case.name().to_string(),
            self.m.to_string(),
            self.instance_seed.to_string(),
            self.status.name().to_string(),
            fmt_f64(self.v_sdp),
            fmt_f64(self.v_hat_qp),
            fmt_f64(self.empirical_ratio),
            fmt_f64(self.theoretical_bound),
        ]
    }
}

pub fn instance_seed(root: u64, case: Case, m: usize, i: usize) -> u64 {
    let c = Case::ALL.iter().position(|&x| x == case).expect("known case") as u64;
    derive_seed(root, label("instance"), (c << 40) | ((m as u64) << 20) | i as u64)
}

/// Runs one instance; failures become the row's status.
pub fn run_instance(cfg: &ExperimentConfig, case: Case, m: usize, seed: u64) -> ExperimentRecord {
    let mut rec = ExperimentRecord {
        case,
        m,
        instance_seed: seed,
        status: RecordStatus::Error,
        v_sdp: f64::NAN,
        v_hat_qp: f64::NAN,
        empirical_ratio: f64::NAN,
        theoretical_bound: f64::NAN,
    };
    let spec = GeneratorSpec::new(case, cfg.n, m, cfg.sense, cfg.field, seed);
    let Ok(g) = generate(&spec) else {
        return rec;
    };
    let params = RoundingParams::new(cfg.scheme, cfg.samples, derive_seed(seed, label("rounding"), 0));
    match solve_and_round(&g.instance, &params) {
        Ok(out) => {
            let r = &out.report;
            rec.status = RecordStatus::Optimal;
            rec.v_sdp = r.v_sdp;
            rec.v_hat_qp = r.best_objective;
            rec.empirical_ratio = r.empirical_ratio;
            rec.theoretical_bound = r.theoretical_bound;
        }
        Err(PipelineError::NotOptimal(sol)) => {
            rec.status = RecordStatus::from_solve(sol.status);
            if sol.status == SolveStatus::Unbounded {
                rec.v_sdp = match cfg.sense {
                    Sense::Minimize => f64::NEG_INFINITY,
                    Sense::Maximize => f64::INFINITY,
                };
            }
        }
        Err(PipelineError::Rounding(RoundingError::NoFeasibleSample(r))) => {
            rec.status = RecordStatus::NoFeasibleSample;
            rec.v_sdp = r.v_sdp;
            rec.theoretical_bound = r.theoretical_bound;
        }
        Err(_) => {}
    }
    rec
}

/// All rows, in `(case, m, instance)` order regardless of scheduling.
pub fn run(cfg: &ExperimentConfig) -> Vec<ExperimentRecord> {
    let jobs: Vec<(Case, usize, usize)> = cfg
        .cases
        .iter()
        .flat_map(|&c| cfg.m_list.iter().flat_map(move |&m| (0..cfg.instances_per_m).map(move |i| (c, m, i))))
        .collect();
    jobs.par_iter()
        .map(|&(c, m, i)| run_instance(cfg, c, m, instance_seed(cfg.seed, c, m, i)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub case: Case,
    pub m: usize,
    pub instances: usize,
    /// Rows with a finite ratio; the statistics range over these.
    pub finite: usize,
    pub min_ratio: f64,
    pub mean_ratio: f64,
    pub max_ratio: f64,
}

/// Min/mean/max of the finite ratios per `(case, m)`, in first-seen order.
/// The mean is accumulated in row order.
pub fn summarize(records: &[ExperimentRecord]) -> Vec<SummaryRow> {
    let mut out: Vec<(SummaryRow, f64)> = Vec::new();
    for r in records {
        let idx = match out.iter().position(|(s, _)| s.case == r.case && s.m == r.m) {
            Some(i) => i,
            None => {
                out.push((
                    SummaryRow {
                        case: r.case,
                        m: r.m,
                        instances: 0,
                        finite: 0,
                        min_ratio: f64::NAN,
                        mean_ratio: f64::NAN,
                        max_ratio: f64::NAN,
                    },
                    0.0,
                ));
                out.len() - 1
            }
        };
        let (s, sum) = &mut out[idx];
        s.instances += 1;
        if r.empirical_ratio.is_finite() {
            s.finite += 1;
            *sum += r.empirical_ratio;
            s.min_ratio = if s.finite == 1 { r.empirical_ratio } else { s.min_ratio.min(r.empirical_ratio) };
            s.max_ratio = if s.finite == 1 { r.empirical_ratio } else { s.max_ratio.max(r.empirical_ratio) };
        }
    }
    out.into_iter()
        .map(|(mut s, sum)| {
            if s.finite > 0 {
                s.mean_ratio = sum / s.finite as f64;
            }
            s
        })
        .collect()
}

pub fn write_csv<W: Write>(records: &[ExperimentRecord], w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(CSV_HEADER)?;
    for r in records {
        wr.write_record(r.csv_row())?;
    }
    wr.flush()?;
    Ok(())
}

pub fn write_summary<W: Write>(rows: &[SummaryRow], root_seed: u64, w: W) -> csv::Result<()> {
    let mut wr = csv::Writer::from_writer(w);
    wr.write_record(SUMMARY_HEADER)?;
    for s in rows {
        wr.write_record([
            root_seed.to_string(),
            s.case.name().to_string(),
            s.m.to_string(),
            s.instances.to_string(),
            s.finite.to_string(),
            fmt_f64(s.min_ratio),
            fmt_f64(s.mean_ratio),
            fmt_f64(s.max_ratio),
        ])?;
    }
    wr.flush()?;
    Ok(())
}

/// `<dir>/<stem>_summary.csv` next to `out`.
pub fn summary_path(out: &std::path::Path) -> std::path::PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("experiment");
    out.with_file_name(format!("{stem}_summary.csv"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_are_distinct() {
        let a = instance_seed(1, Case::A, 5, 0);
        assert_ne!(a, instance_seed(1, Case::A, 5, 1));
        assert_ne!(a, instance_seed(1, Case::B, 5, 0));
        assert_ne!(a, instance_seed(1, Case::A, 10, 0));
        assert_ne!(a, instance_seed(2, Case::A, 5, 0));
    }

    #[test]
    fn empty_sweep_is_header_only() {
        let mut cfg = ExperimentConfig::desk(3);
        cfg.instances_per_m = 0;
        let rows = run(&cfg);
        assert!(rows.is_empty());
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "case,m,instance_seed,status,v_sdp,v_hat_qp,ratio,bound\n");
    }

    #[test]
    fn summary_path_uses_stem() {
        let p = summary_path(std::path::Path::new("/tmp/x/run.csv"));
        assert_eq!(p, std::path::PathBuf::from("/tmp/x/run_summary.csv"));
    }
}
