//! Smooth benchmark comparison of GD, RGB and IRGB.

use std::path::Path;

use irg_core::baselines::{gd_backtracking_run, rg_run};
use irg_core::benchmarks::{BenchmarkFunction, ExactOracle, NoisyOracle};
use irg_core::direction::run_irg;
use irg_core::stepsize::{DEFAULT_BETA, DEFAULT_GAMMA};
use irg_core::trace::fmt_f64;
use irg_core::{StepsizeRule, Trace};

use crate::artifacts::{self, opt, Manifest, ManifestEntry};
use crate::error::{CliError, Result};
use crate::spec::{ExperimentSpec, SolverKind};

#[derive(Debug)]
pub struct BenchRow {
    pub solver: String,
    pub seed: u64,
    pub trace: Result<Trace, irg_core::Error>,
}

impl BenchRow {
    pub fn file_name(&self, function: &BenchmarkFunction) -> String {
        format!(
            "trace_{}_{}_s{}.csv",
            function.label(),
            self.solver,
            self.seed
        )
    }
}

#[derive(Debug)]
pub struct BenchRun {
    pub function: BenchmarkFunction,
    pub nu: f64,
    pub rows: Vec<BenchRow>,
}

impl BenchRun {
    pub fn trace(&self, solver: &str, seed: u64) -> Option<&Trace> {
        self.rows
            .iter()
            .find(|r| r.solver == solver && r.seed == seed)
            .and_then(|r| r.trace.as_ref().ok())
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.trace.is_err()).count()
    }
}

fn gd_params(rule: &StepsizeRule) -> (f64, f64) {
    match *rule {
        StepsizeRule::Backtracking { beta, gamma, .. } => (beta, gamma),
        _ => (DEFAULT_BETA, DEFAULT_GAMMA),
    }
}

/// Runs every solver for every seed, in memory.
pub fn run_bench(spec: &ExperimentSpec) -> Result<BenchRun> {
    let function = spec.benchmark()?;
    let x1 = function.start_point();
    let exact = ExactOracle::new(function);
    let cfg = &spec.run;
    let nu = cfg.stopping.nu;
    let mut rows = Vec::new();
    for &seed in &spec.seeds {
        for solver in &spec.solvers {
            let trace = match solver.kind {
                SolverKind::Gd => {
                    let (beta, gamma) = gd_params(&cfg.rule);
                    gd_backtracking_run(&exact, x1.clone(), beta, gamma, nu, spec.max_iterations())
                }
                SolverKind::Rgb => rg_run(cfg, &exact, x1.clone()),
                SolverKind::Irgb => {
                    let mut cfg = cfg.clone();
                    cfg.seed = seed;
                    let mut noisy = NoisyOracle::new(function, seed);
                    run_irg(&cfg, &mut noisy, x1.clone(), "IRGB")
                }
                SolverKind::Irg { .. } | SolverKind::Ippm { .. } => {
                    return Err(CliError::Config(format!(
                        "{} is not a benchmark solver",
                        solver.label
                    )))
                }
            };
            rows.push(BenchRow {
                solver: solver.label.clone(),
                seed,
                trace,
            });
        }
    }
    Ok(BenchRun { function, nu, rows })
}

/// Runs the comparison and writes traces, `summary.csv`, per-seed error plot
/// data and the manifest into `spec.out`.
pub fn cmd_bench(spec: &ExperimentSpec) -> Result<BenchRun> {
    let run = run_bench(spec)?;
    write_bench_artifacts(spec, &run)?;
    Ok(run)
}

pub fn write_bench_artifacts(spec: &ExperimentSpec, run: &BenchRun) -> Result<()> {
    let dir = &spec.out;
    artifacts::create_dir(dir)?;
    let f = &run.function;
    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut header = vec![
        "problem", "n", "nu", "solver", "seed", "status", "iter", "fval", "eps", "delta", "trace",
    ];
    if spec.timing {
        header.push("wall_time");
    }
    summary.write_record(&header)?;
    let mut manifest = Manifest {
        suite: "bench".into(),
        trace: Vec::new(),
    };
    for row in &run.rows {
        let file = row.file_name(f);
        let n = f.start_point().len();
        let mut record = vec![
            f.name().to_string(),
            n.to_string(),
            fmt_f64(run.nu),
            row.solver.clone(),
            row.seed.to_string(),
        ];
        match &row.trace {
            Ok(trace) => {
                artifacts::write_trace(dir, &file, trace)?;
                let (iter, fval, eps, delta) = match trace.summarize() {
                    Ok(s) => {
                        let last = trace.records.last();
                        (
                            s.iterations,
                            s.final_fval,
                            s.final_eps,
                            last.and_then(|r| r.delta),
                        )
                    }
                    Err(_) => (
                        0,
                        trace.terminal.as_ref().map_or(f64::NAN, |t| t.fval),
                        None,
                        None,
                    ),
                };
                record.extend([
                    trace.status.as_str().to_string(),
                    iter.to_string(),
                    fmt_f64(fval),
                    opt(eps),
                    opt(delta),
                    file.clone(),
                ]);
                if spec.timing {
                    record.push(fmt_f64(trace.wall_time.as_secs_f64()));
                }
                let mut entry = ManifestEntry {
                    file: file.clone(),
                    solver: row.solver.clone(),
                    seed: row.seed,
                    status: trace.status.as_str().into(),
                    problem: f.name().into(),
                    n,
                    nu: Some(run.nu),
                    ..Default::default()
                };
                entry.set_kind(&trace.kind);
                manifest.trace.push(entry);
                if row.solver == "IRGB" {
                    write_errors(dir, f, row.seed, trace)?;
                }
            }
            Err(e) => {
                artifacts::write_empty_trace(dir, &file)?;
                record.extend([format!("error: {e}"), String::new(), String::new()]);
                record.extend([String::new(), String::new(), file.clone()]);
                if spec.timing {
                    record.push(String::new());
                }
            }
        }
        summary.write_record(&record)?;
    }
    summary.flush()?;
    manifest.write(dir)?;
    Ok(())
}

/// `δ_k` next to `‖∇f(x^k)‖` per iteration.
fn write_errors(dir: &Path, f: &BenchmarkFunction, seed: u64, trace: &Trace) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(format!("errors_{}_s{seed}.csv", f.label())))?;
    w.write_record(["k", "delta", "exact_gnorm"])?;
    for rec in &trace.records {
        w.write_record([rec.k.to_string(), opt(rec.delta), opt(rec.exact_grad_norm)])?;
    }
    w.flush()?;
    Ok(())
}
