//! Diagnostics over saved or freshly produced traces.

use std::fs::File;
use std::io::BufReader;

use irg_core::benchmarks::{BenchmarkFunction, ExactOracle};
use irg_core::diagnostics::{run_diagnostics, DiagnosticOptions, DiagnosticReport};
use irg_core::{Oracle, RunStatus, Trace};

use crate::artifacts::{Manifest, MANIFEST_FILE};
use crate::bench::run_bench;
use crate::error::{CliError, Result};
use crate::spec::ExperimentSpec;

#[derive(Debug)]
pub struct CheckOutcome {
    pub reports: Vec<DiagnosticReport>,
    /// Trace files that could not be loaded, with the reason.
    pub load_failures: Vec<(String, String)>,
}

impl CheckOutcome {
    pub fn failed_checks(&self) -> usize {
        self.load_failures.len()
            + self
                .reports
                .iter()
                .map(|r| r.checks.iter().filter(|c| c.failed()).count())
                .sum::<usize>()
    }
}

impl std::fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for (file, why) in &self.load_failures {
            writeln!(f, "{file} load FAIL ({why})")?;
        }
        for r in &self.reports {
            write!(f, "{r}")?;
        }
        Ok(())
    }
}

/// Checks the traces listed in `spec.out`'s manifest when there is one, and
/// otherwise runs the benchmark comparison inline. Reports are written next
/// to the traces as `report_<trace>.csv`.
pub fn cmd_check(spec: &ExperimentSpec) -> Result<CheckOutcome> {
    let outcome = if spec.out.join(MANIFEST_FILE).exists() {
        check_saved(spec)?
    } else {
        check_inline(spec)?
    };
    Ok(outcome)
}

fn write_report(spec: &ExperimentSpec, stem: &str, report: &DiagnosticReport) -> Result<()> {
    crate::artifacts::create_dir(&spec.out)?;
    let file = File::create(spec.out.join(format!("report_{stem}.csv")))?;
    report.write_csv(file)?;
    Ok(())
}

fn check_saved(spec: &ExperimentSpec) -> Result<CheckOutcome> {
    let manifest = Manifest::read(&spec.out)?;
    let mut outcome = CheckOutcome {
        reports: Vec::new(),
        load_failures: Vec::new(),
    };
    for entry in &manifest.trace {
        let path = spec.out.join(&entry.file);
        let file = File::open(&path)
            .map_err(|e| CliError::Config(format!("missing trace file {}: {e}", path.display())))?;
        let kind = entry.trace_kind()?;
        let mut trace = match Trace::read_csv(BufReader::new(file), entry.solver.clone(), kind) {
            Ok(t) => t,
            Err(e) => {
                outcome
                    .load_failures
                    .push((entry.file.clone(), e.to_string()));
                continue;
            }
        };
        trace.status = RunStatus::parse(&entry.status).unwrap_or(RunStatus::Running);
        trace.solver = format!("{}[s{}]", entry.solver, entry.seed);
        let oracle = (manifest.suite == "bench")
            .then(|| BenchmarkFunction::new(&entry.problem, entry.n))
            .transpose()?
            .map(ExactOracle::new);
        let options = DiagnosticOptions {
            nu: entry.nu,
            ..Default::default()
        };
        let report = run_diagnostics(&trace, oracle.as_ref().map(|o| o as &dyn Oracle), &options)?;
        let stem = entry.file.trim_end_matches(".csv");
        write_report(spec, stem, &report)?;
        outcome.reports.push(report);
    }
    Ok(outcome)
}

fn check_inline(spec: &ExperimentSpec) -> Result<CheckOutcome> {
    let run = run_bench(spec)?;
    let oracle = ExactOracle::new(run.function);
    let options = DiagnosticOptions {
        nu: Some(run.nu),
        ..Default::default()
    };
    let mut outcome = CheckOutcome {
        reports: Vec::new(),
        load_failures: Vec::new(),
    };
    for row in &run.rows {
        let trace = row
            .trace
            .as_ref()
            .map_err(|e| CliError::Solver(e.clone()))?;
        let mut report = run_diagnostics(trace, Some(&oracle), &options)?;
        report.solver = format!("{}[s{}]", row.solver, row.seed);
        let stem = row.file_name(&run.function);
        write_report(spec, stem.trim_end_matches(".csv"), &report)?;
        outcome.reports.push(report);
    }
    Ok(outcome)
}
