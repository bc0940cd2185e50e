//! Experiment specification: TOML sections merged with command-line
//! overrides on top of per-suite defaults.

use std::path::{Path, PathBuf};
use std::time::Duration;

use irg_core::benchmarks::BenchmarkFunction;
use irg_core::lad::{LadNullStep, LadOptions, DEFAULT_MAX_INNER};
use irg_core::stepsize::{DEFAULT_BETA, DEFAULT_GAMMA, DEFAULT_MAX_HALVINGS, DEFAULT_TAU};
use irg_core::{RhoSchedule, RunConfig, StepsizeRule, StopMode};
use serde::Deserialize;

use crate::error::{CliError, Result};

pub const DEFAULT_WALL_CLOCK_SECS: f64 = 60.0;
pub const DEFAULT_MAX_ITERATIONS: usize = 10_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Bench,
    Lad,
    Check,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FileConfig {
    pub problem: ProblemSection,
    pub stepsize: StepsizeSection,
    pub radii: RadiiSection,
    pub stopping: StoppingSection,
    pub output: OutputSection,
    pub lad: LadSection,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProblemSection {
    pub name: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub seed: Option<u64>,
    pub seeds: Option<Vec<u64>>,
    pub solvers: Option<Vec<String>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepsizeSection {
    pub rule: Option<String>,
    pub beta: Option<f64>,
    pub gamma: Option<f64>,
    pub tau: Option<f64>,
    pub max_halvings: Option<u32>,
    pub step: Option<f64>,
    pub lipschitz: Option<f64>,
    pub margin: Option<f64>,
    pub base: Option<f64>,
    pub exponent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiiSection {
    pub eps1: Option<f64>,
    pub r1: Option<f64>,
    pub theta: Option<f64>,
    pub mu: Option<f64>,
    pub rho: Option<String>,
    pub rho_value: Option<f64>,
    pub rho_scale: Option<f64>,
    pub rho_power: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StoppingSection {
    pub mode: Option<String>,
    pub nu: Option<f64>,
    pub max_iterations: Option<usize>,
    /// Seconds; 0 disables the cap.
    pub wall_clock: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
    pub timing: Option<bool>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LadSection {
    pub reference_power: Option<f64>,
    pub reference_iterations: Option<usize>,
    pub lad_null_step: Option<String>,
    pub warm_start: Option<bool>,
    pub max_inner: Option<usize>,
    /// Instance file in the `m n` / row-major text format.
    pub instance: Option<PathBuf>,
}

impl FileConfig {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }
}

/// Command-line flags; each one set replaces the file value.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub problem: Option<String>,
    pub n: Option<usize>,
    pub m: Option<usize>,
    pub nu: Option<f64>,
    pub seed: Option<u64>,
    pub out: Option<PathBuf>,
    pub solvers: Option<Vec<String>>,
    pub timing: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SolverKind {
    Gd,
    Rgb,
    Irgb,
    Irg { r1: f64 },
    Ippm { power: f64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct SolverSpec {
    pub label: String,
    pub kind: SolverKind,
}

impl SolverSpec {
    pub fn parse(label: &str) -> Result<Self> {
        let label = label.trim();
        let number = |rest: &str| {
            rest.parse::<f64>()
                .ok()
                .filter(|v| *v > 0.0 && v.is_finite())
                .ok_or_else(|| CliError::Config(format!("bad parameter in solver name {label}")))
        };
        let kind = match label {
            "GD" => SolverKind::Gd,
            "RGB" => SolverKind::Rgb,
            "IRGB" => SolverKind::Irgb,
            _ => {
                if let Some(rest) = label.strip_prefix("IRG-") {
                    SolverKind::Irg { r1: number(rest)? }
                } else if let Some(rest) = label.strip_prefix("IPPM-") {
                    SolverKind::Ippm {
                        power: number(rest)?,
                    }
                } else {
                    return Err(CliError::Config(format!("unknown solver {label}")));
                }
            }
        };
        Ok(Self {
            label: label.to_string(),
            kind,
        })
    }

    fn is_bench(&self) -> bool {
        matches!(
            self.kind,
            SolverKind::Gd | SolverKind::Rgb | SolverKind::Irgb
        )
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LadSettings {
    pub reference_power: f64,
    pub reference_iterations: usize,
    pub null_step: LadNullStep,
    pub options: LadOptions,
    pub instance: Option<PathBuf>,
}

/// A fully resolved experiment.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub suite: Suite,
    pub problem: String,
    pub n: usize,
    pub m: usize,
    pub seeds: Vec<u64>,
    pub solvers: Vec<SolverSpec>,
    /// Base configuration of the reduced gradient solvers. For the LAD suite
    /// `r1` is replaced per solver.
    pub run: RunConfig,
    pub out: PathBuf,
    pub timing: bool,
    pub lad: LadSettings,
}

fn positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err(CliError::Config(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

fn parse_rho(radii: &RadiiSection, default: RhoSchedule) -> Result<RhoSchedule> {
    let Some(name) = radii.rho.as_deref() else {
        return Ok(default);
    };
    Ok(match name {
        "inverse_log" => RhoSchedule::InverseLog,
        "eps" => RhoSchedule::EpsMirror,
        "constant" => RhoSchedule::Constant(radii.rho_value.unwrap_or(0.0)),
        "inverse_power" => RhoSchedule::InversePower {
            scale: radii.rho_scale.unwrap_or(1.0),
            power: radii
                .rho_power
                .ok_or_else(|| CliError::Config("rho = inverse_power needs rho_power".into()))?,
        },
        other => return Err(CliError::Config(format!("unknown rho schedule {other}"))),
    })
}

fn parse_rule(s: &StepsizeSection) -> Result<StepsizeRule> {
    let rule = s.rule.as_deref().unwrap_or("backtracking");
    Ok(match rule {
        "backtracking" => StepsizeRule::Backtracking {
            beta: s.beta.unwrap_or(DEFAULT_BETA),
            gamma: s.gamma.unwrap_or(DEFAULT_GAMMA),
            tau: s.tau.unwrap_or(DEFAULT_TAU),
            max_halvings: s.max_halvings.unwrap_or(DEFAULT_MAX_HALVINGS),
        },
        "constant" => StepsizeRule::Constant {
            lipschitz: s
                .lipschitz
                .ok_or_else(|| CliError::Config("constant rule needs lipschitz".into()))?,
            margin: s.margin.unwrap_or(1.0),
            step: s
                .step
                .or_else(|| s.lipschitz.map(|l| (2.0 - s.margin.unwrap_or(1.0)) / l))
                .unwrap_or(0.0),
        },
        "diminishing" => StepsizeRule::Diminishing {
            base: s.base.unwrap_or(1.0),
            exponent: s.exponent.unwrap_or(1.0),
        },
        "prox_jump" => StepsizeRule::ProxJump,
        other => return Err(CliError::Config(format!("unknown stepsize rule {other}"))),
    })
}

impl ExperimentSpec {
    pub fn resolve(suite: Suite, file: &FileConfig, cli: &Overrides) -> Result<Self> {
        let lad_suite = suite == Suite::Lad;
        let p = &file.problem;
        let problem = cli
            .problem
            .clone()
            .or_else(|| p.name.clone())
            .unwrap_or_else(|| if lad_suite { "lad" } else { "dixon_price" }.into());
        let n = cli.n.or(p.n).unwrap_or(if lad_suite { 50 } else { 10 });
        let m = cli.m.or(p.m).unwrap_or(50);
        let seeds = match (cli.seed, &p.seeds, p.seed) {
            (Some(s), _, _) => vec![s],
            (None, Some(list), _) => list.clone(),
            (None, None, Some(s)) => vec![s],
            (None, None, None) => vec![0],
        };
        if seeds.is_empty() {
            return Err(CliError::Config("seed list is empty".into()));
        }
        let solver_names = cli
            .solvers
            .clone()
            .or_else(|| p.solvers.clone())
            .unwrap_or_else(|| {
                let names: &[&str] = if lad_suite {
                    &["IRG-5", "IRG-20", "IPPM-4"]
                } else {
                    &["GD", "RGB", "IRGB"]
                };
                names.iter().map(|s| s.to_string()).collect()
            });
        let solvers = solver_names
            .iter()
            .map(|s| SolverSpec::parse(s))
            .collect::<Result<Vec<_>>>()?;
        if solvers.is_empty() {
            return Err(CliError::Config("solver list is empty".into()));
        }
        if let Some(bad) = solvers.iter().find(|s| s.is_bench() == lad_suite) {
            return Err(CliError::Config(format!(
                "solver {} does not belong to this suite",
                bad.label
            )));
        }

        let l = &file.lad;
        let null_step = LadNullStep::parse(l.lad_null_step.as_deref().unwrap_or("prox_jump"))?;
        let lad = LadSettings {
            reference_power: positive("reference_power", l.reference_power.unwrap_or(2.1))?,
            reference_iterations: l.reference_iterations.unwrap_or(50),
            null_step,
            options: LadOptions {
                warm_start: l.warm_start.unwrap_or(true),
                max_inner: l.max_inner.unwrap_or(DEFAULT_MAX_INNER),
            },
            instance: l.instance.clone(),
        };

        let st = &file.stopping;
        let mut run = if lad_suite {
            if file.stepsize.rule.is_some() {
                return Err(CliError::Config(
                    "the LAD suite takes its stepsize from [lad] lad_null_step".into(),
                ));
            }
            let mut run = RunConfig::lad_defaults(1.0);
            run.rule = null_step.rule();
            run
        } else {
            let nu = cli.nu.or(st.nu).unwrap_or(0.01);
            let mut run = RunConfig::benchmark_defaults(nu);
            run.rule = parse_rule(&file.stepsize)?;
            run
        };
        let r = &file.radii;
        run.eps1 = r.eps1.unwrap_or(run.eps1);
        run.r1 = r.r1.unwrap_or(run.r1);
        run.theta = r.theta.unwrap_or(run.theta);
        run.mu = r.mu.unwrap_or(run.mu);
        run.rho = parse_rho(r, run.rho)?;
        if let Some(nu) = cli.nu.or(st.nu) {
            run.stopping.nu = positive("nu", nu)?;
        }
        run.stopping.mode = match st.mode.as_deref() {
            None => run.stopping.mode,
            Some("exact") => StopMode::ExactGradient,
            Some("certified") => StopMode::Certified,
            Some(other) => return Err(CliError::Config(format!("unknown stopping mode {other}"))),
        };
        run.stopping.max_iterations = st.max_iterations.unwrap_or(DEFAULT_MAX_ITERATIONS);
        let wall = st.wall_clock.unwrap_or(DEFAULT_WALL_CLOCK_SECS);
        if !(wall >= 0.0 && wall.is_finite()) {
            return Err(CliError::Config(format!(
                "wall_clock must be >= 0, got {wall}"
            )));
        }
        run.stopping.wall_clock = (wall > 0.0).then(|| Duration::from_secs_f64(wall));
        run.validate()
            .map_err(|e| CliError::Config(e.to_string()))?;

        if !lad_suite {
            BenchmarkFunction::new(&problem, n).map_err(|e| CliError::Config(e.to_string()))?;
        }

        let out = cli
            .out
            .clone()
            .or_else(|| file.output.dir.clone())
            .unwrap_or_else(|| PathBuf::from("irg-out"));
        Ok(Self {
            suite,
            problem,
            n,
            m,
            seeds,
            solvers,
            run,
            out,
            timing: cli.timing || file.output.timing.unwrap_or(false),
            lad,
        })
    }

    pub fn benchmark(&self) -> Result<BenchmarkFunction> {
        BenchmarkFunction::new(&self.problem, self.n).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn wall_clock(&self) -> Option<Duration> {
        self.run.stopping.wall_clock
    }

    pub fn max_iterations(&self) -> usize {
        self.run.stopping.max_iterations
    }
}
