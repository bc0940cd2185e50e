//! LAD curve fitting race: an IPPM reference run fixes a target value, then
//! every racer runs until it reaches that value or a budget runs out.

use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use irg_core::baselines::{ippm_run, IppmConfig, OmegaSchedule};
use irg_core::lad::{generate_gaussian_instance, irg_lad_run, LadProblem};
use irg_core::trace::fmt_f64;
use irg_core::{Point, Trace};

use crate::artifacts::{self, opt, Manifest, ManifestEntry};
use crate::error::{CliError, Result};
use crate::spec::{ExperimentSpec, SolverKind};

#[derive(Debug)]
pub struct LadRow {
    pub solver: String,
    pub seed: u64,
    pub reference: bool,
    pub trace: Result<Trace, irg_core::Error>,
}

impl LadRow {
    pub fn file_name(&self) -> String {
        format!("trace_{}_s{}.csv", self.solver, self.seed)
    }

    /// Value at the stopping point.
    pub fn final_fval(&self) -> Option<f64> {
        self.trace.as_ref().ok()?.terminal.as_ref().map(|t| t.fval)
    }
}

#[derive(Debug)]
pub struct LadInstance {
    pub seed: u64,
    pub problem: LadProblem,
    /// Reference value, absent when the reference run failed.
    pub target: Option<f64>,
}

#[derive(Debug)]
pub struct LadRun {
    pub instances: Vec<LadInstance>,
    pub rows: Vec<LadRow>,
}

impl LadRun {
    pub fn row(&self, solver: &str, seed: u64) -> Option<&LadRow> {
        self.rows
            .iter()
            .find(|r| r.solver == solver && r.seed == seed)
    }

    pub fn target(&self, seed: u64) -> Option<f64> {
        self.instances.iter().find(|i| i.seed == seed)?.target
    }

    /// Whether `row` stopped at or below its instance's reference value.
    pub fn reached(&self, row: &LadRow) -> bool {
        match (self.target(row.seed), row.final_fval()) {
            (Some(t), Some(f)) => f <= t,
            _ => false,
        }
    }

    pub fn failed(&self) -> usize {
        self.rows.iter().filter(|r| r.trace.is_err()).count()
    }
}

fn reference_label(power: f64) -> String {
    format!("IPPM-{power}")
}

fn load_instance(spec: &ExperimentSpec, seed: u64) -> Result<LadProblem> {
    match &spec.lad.instance {
        Some(path) => {
            let file = File::open(path)
                .map_err(|e| CliError::Config(format!("cannot open {}: {e}", path.display())))?;
            LadProblem::read_text(BufReader::new(file)).map_err(|e| CliError::Config(e.to_string()))
        }
        None => generate_gaussian_instance(spec.m, spec.n, seed)
            .map_err(|e| CliError::Config(e.to_string())),
    }
}

pub fn run_lad(spec: &ExperimentSpec) -> Result<LadRun> {
    let mut instances = Vec::new();
    let mut rows = Vec::new();
    for &seed in &spec.seeds {
        let problem = load_instance(spec, seed)?;
        let x1 = Point::zeros(problem.n());

        let mut ref_cfg = IppmConfig::new(spec.lad.reference_power, spec.lad.reference_iterations);
        ref_cfg.warm_start = spec.lad.options.warm_start;
        ref_cfg.max_inner = spec.lad.options.max_inner;
        let label = reference_label(spec.lad.reference_power);
        let reference = ippm_run(&problem, x1.clone(), &ref_cfg, &label);
        let target = reference
            .as_ref()
            .ok()
            .and_then(|t| t.terminal.as_ref())
            .map(|t| t.fval);
        rows.push(LadRow {
            solver: label,
            seed,
            reference: true,
            trace: reference,
        });

        if let Some(target) = target {
            for solver in &spec.solvers {
                let trace = match solver.kind {
                    SolverKind::Irg { r1 } => {
                        let mut cfg = spec.run.clone();
                        cfg.r1 = r1;
                        cfg.seed = seed;
                        cfg.stopping.target_value = Some(target);
                        irg_lad_run(&problem, &cfg, spec.lad.options, &solver.label)
                    }
                    SolverKind::Ippm { power } => {
                        let cfg = IppmConfig {
                            omega: OmegaSchedule::power(power),
                            max_iterations: spec.max_iterations(),
                            target_fval: Some(target),
                            wall_clock: spec.wall_clock(),
                            warm_start: spec.lad.options.warm_start,
                            max_inner: spec.lad.options.max_inner,
                        };
                        ippm_run(&problem, x1.clone(), &cfg, &solver.label)
                    }
                    _ => {
                        return Err(CliError::Config(format!(
                            "{} is not a LAD solver",
                            solver.label
                        )))
                    }
                };
                rows.push(LadRow {
                    solver: solver.label.clone(),
                    seed,
                    reference: false,
                    trace,
                });
            }
        }
        instances.push(LadInstance {
            seed,
            problem,
            target,
        });
    }
    Ok(LadRun { instances, rows })
}

pub fn cmd_lad(spec: &ExperimentSpec) -> Result<LadRun> {
    let run = run_lad(spec)?;
    write_lad_artifacts(spec, &run)?;
    Ok(run)
}

fn cumulative_inner(trace: &Trace) -> Vec<usize> {
    trace
        .records
        .iter()
        .scan(0, |acc, r| {
            *acc += r.inner.map_or(0, |s| s.iters);
            Some(*acc)
        })
        .collect()
}

pub fn write_lad_artifacts(spec: &ExperimentSpec, run: &LadRun) -> Result<()> {
    let dir = &spec.out;
    artifacts::create_dir(dir)?;
    let mut summary = csv::Writer::from_path(dir.join("summary.csv"))?;
    let mut header = vec![
        "m",
        "n",
        "seed",
        "solver",
        "role",
        "status",
        "iter",
        "fval",
        "final_fval",
        "target",
        "reached",
        "inner_total",
        "trace",
    ];
    if spec.timing {
        header.push("wall_time");
    }
    summary.write_record(&header)?;
    let mut manifest = Manifest {
        suite: "lad".into(),
        trace: Vec::new(),
    };
    for inst in &run.instances {
        let out = BufWriter::new(File::create(
            dir.join(format!("instance_s{}.txt", inst.seed)),
        )?);
        inst.problem.write_text(out)?;
        let rows: Vec<&LadRow> = run.rows.iter().filter(|r| r.seed == inst.seed).collect();
        write_plot_data(dir, inst.seed, &rows)?;
    }
    for row in &run.rows {
        let inst = run
            .instances
            .iter()
            .find(|i| i.seed == row.seed)
            .expect("every row belongs to an instance");
        let (m, n) = (inst.problem.m(), inst.problem.n());
        let file = row.file_name();
        let mut record = vec![
            m.to_string(),
            n.to_string(),
            row.seed.to_string(),
            row.solver.clone(),
            if row.reference { "reference" } else { "racer" }.to_string(),
        ];
        match &row.trace {
            Ok(trace) => {
                artifacts::write_trace(dir, &file, trace)?;
                let (iter, fval) = trace
                    .summarize()
                    .map(|s| (s.iterations, s.final_fval))
                    .unwrap_or((0, f64::NAN));
                let inner_total = cumulative_inner(trace).last().copied().unwrap_or(0);
                record.extend([
                    trace.status.as_str().to_string(),
                    iter.to_string(),
                    fmt_f64(fval),
                    opt(row.final_fval()),
                    opt(inst.target),
                    run.reached(row).to_string(),
                    inner_total.to_string(),
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
                    problem: "lad".into(),
                    n,
                    m: Some(m),
                    nu: Some(spec.run.stopping.nu),
                    ..Default::default()
                };
                entry.set_kind(&trace.kind);
                manifest.trace.push(entry);
            }
            Err(e) => {
                artifacts::write_empty_trace(dir, &file)?;
                record.push(format!("error: {e}"));
                record.extend(std::iter::repeat_n(String::new(), 3));
                record.extend([
                    opt(inst.target),
                    "false".into(),
                    String::new(),
                    file.clone(),
                ]);
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

/// `fval_s*.csv`: value against cumulative inner iterations, the
/// deterministic stand-in for time. `errors_s*.csv`: `ω_k` and `ε_k`.
fn write_plot_data(dir: &Path, seed: u64, rows: &[&LadRow]) -> Result<()> {
    let mut fv = csv::Writer::from_path(dir.join(format!("fval_s{seed}.csv")))?;
    fv.write_record(["solver", "k", "cum_inner", "fval"])?;
    let mut er = csv::Writer::from_path(dir.join(format!("errors_s{seed}.csv")))?;
    er.write_record(["solver", "k", "omega", "eps", "gap"])?;
    for row in rows {
        let Ok(trace) = &row.trace else { continue };
        let cum = cumulative_inner(trace);
        for (rec, c) in trace.records.iter().zip(&cum) {
            fv.write_record([
                row.solver.clone(),
                rec.k.to_string(),
                c.to_string(),
                fmt_f64(rec.fval),
            ])?;
            er.write_record([
                row.solver.clone(),
                rec.k.to_string(),
                opt(rec.inner.map(|s| s.omega)),
                opt(rec.eps),
                opt(rec.inner.map(|s| s.gap)),
            ])?;
        }
        if let Some(t) = &trace.terminal {
            fv.write_record([
                row.solver.clone(),
                (trace.len() + 1).to_string(),
                cum.last().copied().unwrap_or(0).to_string(),
                fmt_f64(t.fval),
            ])?;
        }
    }
    fv.flush()?;
    er.flush()?;
    Ok(())
}
