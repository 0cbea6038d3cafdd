use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use hquad::experiment::{self, ExperimentConfig};
use hquad::io::{self, patch_non_finite, FactorJson, SolutionJson};
use hquad::pipeline::{round_solution, PipelineError};
use hquad::verify::{self, CheckId, VerifyConfig};
use hquad::{exit, THREADS_ENV};
use hquad_core::instances::{canonical, Case, ExampleId};
use hquad_core::rounding::{RoundingError, RoundingParams, RoundingReport, Scheme, DEFAULT_SAMPLES};
use hquad_core::sdp::{solve, QcqpInstance};
use hquad_core::{Field, Sense, SolveStatus};
use serde_json::{json, Value};

const DEFAULT_SEED: u64 = 20_080_101;

#[derive(Parser)]
#[command(name = "hquad", version, about = "SDP relaxation and randomized rounding for homogeneous quadratic programs")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Solve the SDP relaxation of an instance file ("-" for stdin).
    Solve { instance: PathBuf },
    /// Solve, reduce rank and round.
    Round {
        instance: PathBuf,
        /// Defaults to gaussian-min or gaussian-max by sense.
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        #[arg(long, default_value_t = DEFAULT_SAMPLES)]
        samples: usize,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Also emit the low-rank factor.
        #[arg(long)]
        factor: bool,
    },
    /// Random-instance sweep written as CSV plus `<stem>_summary.csv`.
    Experiment {
        /// Comma-separated subset of a,b,c,d.
        #[arg(long, value_delimiter = ',')]
        cases: Option<Vec<String>>,
        #[arg(long, value_delimiter = ',')]
        m_list: Option<Vec<usize>>,
        #[arg(long)]
        instances_per_m: Option<usize>,
        #[arg(long)]
        samples: Option<usize>,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, value_enum, default_value_t = SenseArg::Min)]
        sense: SenseArg,
        #[arg(long, value_enum, default_value_t = FieldArg::Real)]
        field: FieldArg,
        #[arg(long, value_enum)]
        scheme: Option<SchemeArg>,
        /// Four cases, m = 5..100, 1000 instances per m.
        #[arg(long)]
        full_scale: bool,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check the probability bounds; nonzero exit if any check fails.
    Verify {
        /// `all` or comma-separated ids (L2_1 .. L4_1, L5_1, closed-form, conjecture).
        #[arg(long, default_value = "all", value_delimiter = ',')]
        lemma: Vec<String>,
        #[arg(long, default_value_t = 1_000_000)]
        samples: u64,
        #[arg(long, default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Random configurations per check.
        #[arg(long, default_value_t = 20)]
        configs: usize,
        /// Largest n for exhaustive sign enumeration.
        #[arg(long, default_value_t = 12)]
        max_n: usize,
    },
    /// Print a canonical instance as JSON.
    Example {
        /// m-example, 3.7, 4.3 or 4.4.
        id: String,
        /// Parameter M of m-example and 4.3.
        #[arg(long = "M", alias = "m")]
        big_m: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    GaussianMin,
    SignMax,
    GaussianMax,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Scheme {
        match s {
            SchemeArg::GaussianMin => Scheme::GaussianMin,
            SchemeArg::SignMax => Scheme::SignMax,
            SchemeArg::GaussianMax => Scheme::GaussianMax,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum SenseArg {
    Min,
    Max,
}

#[derive(Clone, Copy, ValueEnum)]
enum FieldArg {
    Real,
    Complex,
}

struct Failure(i32, String);

type CmdResult = Result<i32, Failure>;

fn input_err(msg: impl std::fmt::Display) -> Failure {
    Failure(exit::INPUT, msg.to_string())
}

fn read_instance(path: &Path) -> Result<QcqpInstance, Failure> {
    let text = if path.as_os_str() == "-" {
        let mut s = String::new();
        std::io::stdin().read_to_string(&mut s).map_err(input_err)?;
        s
    } else {
        fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?
    };
    io::parse_instance(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("JSON value serializes"));
}

fn status_code(s: SolveStatus) -> i32 {
    match s {
        SolveStatus::Optimal => exit::OK,
        SolveStatus::Infeasible | SolveStatus::Unbounded => exit::UNBOUNDED_OR_INFEASIBLE,
        SolveStatus::NumericalFailure => exit::NUMERICAL,
    }
}

fn cmd_solve(path: &Path) -> CmdResult {
    let inst = read_instance(path)?;
    let sol = solve(&inst).map_err(|e| Failure(exit::NUMERICAL, e.to_string()))?;
    print_json(&serde_json::to_value(SolutionJson::new(&sol)).expect("solution serializes"));
    Ok(status_code(sol.status))
}

fn report_json(r: &RoundingReport) -> Value {
    let mut v = serde_json::to_value(r).expect("report serializes");
    patch_non_finite(
        &mut v,
        &[
            ("best_objective", r.best_objective),
            ("v_sdp", r.v_sdp),
            ("empirical_ratio", r.empirical_ratio),
            ("theoretical_bound", r.theoretical_bound),
        ],
    );
    v
}

fn cmd_round(path: &Path, scheme: Option<SchemeArg>, samples: usize, seed: u64, factor: bool) -> CmdResult {
    let inst = read_instance(path)?;
    let scheme = scheme.map(Scheme::from).unwrap_or(Scheme::default_for(inst.sense()));
    let params = RoundingParams::new(scheme, samples, seed);
    params.validate().map_err(input_err)?;
    eprintln!("root seed {seed}");
    let sol = solve(&inst).map_err(|e| Failure(exit::NUMERICAL, e.to_string()))?;
    let solution = SolutionJson::new(&sol);
    match round_solution(&inst, sol, &params) {
        Ok(out) => {
            let mut v = json!({
                "root_seed": seed,
                "scheme": scheme,
                "solution": solution,
                "rank": out.low.rank,
                "rank_steps": out.low.steps,
                "rank_bound_met": out.low.bound_met,
                "report": report_json(&out.report),
            });
            if factor {
                v["factor"] = serde_json::to_value(FactorJson::new(&out.low)).expect("factor serializes");
            }
            print_json(&v);
            Ok(exit::OK)
        }
        Err(PipelineError::NotOptimal(sol)) => {
            print_json(&json!({ "root_seed": seed, "scheme": scheme, "solution": solution }));
            Err(Failure(status_code(sol.status), format!("relaxation is {}", io::status_name(sol.status))))
        }
        Err(PipelineError::Rounding(RoundingError::NoFeasibleSample(r))) => {
            print_json(&json!({ "root_seed": seed, "scheme": scheme, "solution": solution, "report": report_json(&r) }));
            Err(Failure(exit::ROUNDING, format!("no feasible sample among {}", r.samples)))
        }
        Err(PipelineError::Rounding(e @ (RoundingError::WrongSense { .. } | RoundingError::InvalidParams(_)))) => Err(input_err(e)),
        Err(e) => Err(Failure(exit::NUMERICAL, e.to_string())),
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_experiment(
    cases: Option<Vec<String>>,
    m_list: Option<Vec<usize>>,
    instances_per_m: Option<usize>,
    samples: Option<usize>,
    seed: u64,
    n: Option<usize>,
    sense: SenseArg,
    field: FieldArg,
    scheme: Option<SchemeArg>,
    full_scale: bool,
    out: &Path,
) -> CmdResult {
    let mut cfg = if full_scale {
        ExperimentConfig::full_scale(seed)
    } else {
        ExperimentConfig::desk(seed)
    };
    if let Some(cs) = cases {
        cfg.cases = cs
            .iter()
            .map(|c| Case::parse(c).ok_or_else(|| input_err(format!("unknown case {c:?}"))))
            .collect::<Result<_, _>>()?;
    }
    if let Some(ms) = m_list {
        if ms.is_empty() {
            return Err(input_err("empty --m-list"));
        }
        cfg.m_list = ms;
    }
    cfg.instances_per_m = instances_per_m.unwrap_or(cfg.instances_per_m);
    cfg.samples = samples.unwrap_or(cfg.samples);
    cfg.n = n.unwrap_or(cfg.n);
    if cfg.n == 0 || cfg.samples == 0 {
        return Err(input_err("n and samples must be positive"));
    }
    cfg.sense = match sense {
        SenseArg::Min => Sense::Minimize,
        SenseArg::Max => Sense::Maximize,
    };
    cfg.field = match field {
        FieldArg::Real => Field::Real,
        FieldArg::Complex => Field::Complex,
    };
    cfg.scheme = scheme.map(Scheme::from).unwrap_or(Scheme::default_for(cfg.sense));
    if cfg.scheme == Scheme::GaussianMin && cfg.sense == Sense::Maximize
        || cfg.scheme != Scheme::GaussianMin && cfg.sense == Sense::Minimize
    {
        return Err(input_err(format!("scheme {} does not apply to {} problems", cfg.scheme.name(), io::sense_name(cfg.sense))));
    }
    eprintln!("root seed {seed}");
    let records = experiment::run(&cfg);
    let write = |path: &Path, f: &dyn Fn(fs::File) -> csv::Result<()>| -> Result<(), Failure> {
        let file = fs::File::create(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
        f(file).map_err(|e| input_err(format!("{}: {e}", path.display())))
    };
    write(out, &|f| experiment::write_csv(&records, f))?;
    let summary = experiment::summarize(&records);
    let spath = experiment::summary_path(out);
    write(&spath, &|f| experiment::write_summary(&summary, seed, f))?;
    for s in &summary {
        eprintln!(
            "case {} m {:>3}: {} / {} finite, ratio min {} mean {} max {}",
            s.case.name(),
            s.m,
            s.finite,
            s.instances,
            io::fmt_f64(s.min_ratio),
            io::fmt_f64(s.mean_ratio),
            io::fmt_f64(s.max_ratio)
        );
    }
    Ok(exit::OK)
}

fn cmd_verify(lemma: &[String], samples: u64, seed: u64, configs: usize, max_n: usize) -> CmdResult {
    let ids = if lemma.iter().any(|l| l.eq_ignore_ascii_case("all")) {
        CheckId::all()
    } else {
        lemma
            .iter()
            .map(|l| CheckId::parse(l).ok_or_else(|| input_err(format!("unknown lemma {l:?}"))))
            .collect::<Result<Vec<_>, _>>()?
    };
    if samples == 0 {
        return Err(input_err("samples must be positive"));
    }
    let mut cfg = VerifyConfig::new(samples, seed);
    cfg.configs = configs;
    cfg.exhaustive_max_n = max_n.clamp(3, hquad_core::probability::EXHAUSTIVE_MAX_N);
    eprintln!("root seed {seed}");
    let report = verify::run(&ids, &cfg);
    print_json(&serde_json::to_value(&report).expect("report serializes"));
    for l in &report.lemmas {
        eprintln!("{:<12} {} ({} checks, {} failed)", l.id, if l.passed { "pass" } else { "FAIL" }, l.checks, l.failures);
    }
    Ok(if report.passed { exit::OK } else { exit::VERIFICATION })
}

fn cmd_example(id: &str, big_m: Option<f64>) -> CmdResult {
    let id = ExampleId::parse(id).ok_or_else(|| input_err(format!("unknown example {id:?}; expected m-example, 3.7, 4.3 or 4.4")))?;
    if let Some(m) = big_m {
        if !(m > 0.0 && m.is_finite()) {
            return Err(input_err("M must be positive"));
        }
    }
    let ex = canonical(id, big_m);
    println!("{}", io::instance_to_json(&ex.instance));
    Ok(exit::OK)
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v.parse().map_err(|_| input_err(format!("{THREADS_ENV} must be a positive integer")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(input_err)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|()| match cli.cmd {
        Cmd::Solve { instance } => cmd_solve(&instance),
        Cmd::Round {
            instance,
            scheme,
            samples,
            seed,
            factor,
        } => cmd_round(&instance, scheme, samples, seed, factor),
        Cmd::Experiment {
            cases,
            m_list,
            instances_per_m,
            samples,
            seed,
            n,
            sense,
            field,
            scheme,
            full_scale,
            out,
        } => cmd_experiment(cases, m_list, instances_per_m, samples, seed, n, sense, field, scheme, full_scale, &out),
        Cmd::Verify {
            lemma,
            samples,
            seed,
            configs,
            max_n,
        } => cmd_verify(&lemma, samples, seed, configs, max_n),
        Cmd::Example { id, big_m } => cmd_example(&id, big_m),
    });
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(Failure(code, msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(code as u8)
        }
    }
}
