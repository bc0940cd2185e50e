//! Experiment harness behind the `irg` binary: the smooth benchmark
//! comparison, the LAD race and trace diagnostics.

pub mod artifacts;
pub mod bench;
pub mod check;
mod error;
pub mod lad;
pub mod spec;

pub use error::{CliError, Result};
pub use spec::{ExperimentSpec, FileConfig, Overrides, Suite};

/// Resolves the spec, runs the suite and returns the text to print.
pub fn run_suite(suite: Suite, file: &FileConfig, cli: &Overrides) -> Result<String> {
    let spec = ExperimentSpec::resolve(suite, file, cli)?;
    match suite {
        Suite::Bench => {
            let run = bench::cmd_bench(&spec)?;
            let mut text = String::new();
            for row in &run.rows {
                let line = match &row.trace {
                    Ok(t) => format!(
                        "{} s{} {} iter={} status={}\n",
                        run.function.label(),
                        row.seed,
                        row.solver,
                        t.len(),
                        t.status.as_str()
                    ),
                    Err(e) => format!(
                        "{} s{} {} error: {e}\n",
                        run.function.label(),
                        row.seed,
                        row.solver
                    ),
                };
                text.push_str(&line);
            }
            match run.failed() {
                0 => Ok(text),
                failed => {
                    eprint!("{text}");
                    Err(CliError::SolverRows { failed })
                }
            }
        }
        Suite::Lad => {
            let run = lad::cmd_lad(&spec)?;
            let mut text = String::new();
            for row in &run.rows {
                let line = match &row.trace {
                    Ok(t) => format!(
                        "s{} {} iter={} status={} reached={}\n",
                        row.seed,
                        row.solver,
                        t.len(),
                        t.status.as_str(),
                        row.reference || run.reached(row)
                    ),
                    Err(e) => format!("s{} {} error: {e}\n", row.seed, row.solver),
                };
                text.push_str(&line);
            }
            match run.failed() {
                0 => Ok(text),
                failed => {
                    eprint!("{text}");
                    Err(CliError::SolverRows { failed })
                }
            }
        }
        Suite::Check => {
            let outcome = check::cmd_check(&spec)?;
            let text = outcome.to_string();
            match outcome.failed_checks() {
                0 => Ok(text),
                failed => {
                    eprint!("{text}");
                    Err(CliError::CheckFailed { failed })
                }
            }
        }
    }
}
