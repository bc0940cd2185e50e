//! Artifact files: trace CSVs, summaries and the manifest that lets `check`
//! reload traces.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use irg_core::stepsize::StepsizeRule;
use irg_core::trace::fmt_f64;
use irg_core::{Trace, TraceKind};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const MANIFEST_FILE: &str = "manifest.toml";

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub suite: String,
    #[serde(default)]
    pub trace: Vec<ManifestEntry>,
}

/// One trace file with what is needed to rebuild its [`TraceKind`].
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ManifestEntry {
    pub file: String,
    pub solver: String,
    pub seed: u64,
    pub status: String,
    pub problem: String,
    pub n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub m: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    pub kind: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rule: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_halvings: Option<u32>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub step: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lipschitz: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub exponent: Option<f64>,
}

impl ManifestEntry {
    pub fn set_kind(&mut self, kind: &TraceKind) {
        match *kind {
            TraceKind::ReducedGradient { theta, mu, rule } => {
                self.kind = "reduced_gradient".into();
                self.theta = Some(theta);
                self.mu = Some(mu);
                match rule {
                    StepsizeRule::Backtracking {
                        beta,
                        gamma,
                        tau,
                        max_halvings,
                    } => {
                        self.rule = Some("backtracking".into());
                        self.beta = Some(beta);
                        self.gamma = Some(gamma);
                        self.tau = Some(tau);
                        self.max_halvings = Some(max_halvings);
                    }
                    StepsizeRule::Constant {
                        step,
                        lipschitz,
                        margin,
                    } => {
                        self.rule = Some("constant".into());
                        self.step = Some(step);
                        self.lipschitz = Some(lipschitz);
                        self.margin = Some(margin);
                    }
                    StepsizeRule::Diminishing { base, exponent } => {
                        self.rule = Some("diminishing".into());
                        self.base = Some(base);
                        self.exponent = Some(exponent);
                    }
                    StepsizeRule::ProxJump => self.rule = Some("prox_jump".into()),
                }
            }
            TraceKind::GradientDescent { beta, gamma } => {
                self.kind = "gradient_descent".into();
                self.beta = Some(beta);
                self.gamma = Some(gamma);
            }
            TraceKind::ProximalPoint => self.kind = "proximal_point".into(),
        }
    }

    pub fn trace_kind(&self) -> Result<TraceKind> {
        let need = |name: &str, v: Option<f64>| {
            v.ok_or_else(|| CliError::Config(format!("manifest entry {} lacks {name}", self.file)))
        };
        Ok(match self.kind.as_str() {
            "reduced_gradient" => {
                let rule = match self.rule.as_deref() {
                    Some("backtracking") => StepsizeRule::Backtracking {
                        beta: need("beta", self.beta)?,
                        gamma: need("gamma", self.gamma)?,
                        tau: need("tau", self.tau)?,
                        max_halvings: self.max_halvings.unwrap_or_default(),
                    },
                    Some("constant") => StepsizeRule::Constant {
                        step: need("step", self.step)?,
                        lipschitz: need("lipschitz", self.lipschitz)?,
                        margin: need("margin", self.margin)?,
                    },
                    Some("diminishing") => StepsizeRule::Diminishing {
                        base: need("base", self.base)?,
                        exponent: need("exponent", self.exponent)?,
                    },
                    Some("prox_jump") => StepsizeRule::ProxJump,
                    other => {
                        return Err(CliError::Config(format!(
                            "manifest entry {} has unknown rule {other:?}",
                            self.file
                        )))
                    }
                };
                TraceKind::ReducedGradient {
                    theta: need("theta", self.theta)?,
                    mu: need("mu", self.mu)?,
                    rule,
                }
            }
            "gradient_descent" => TraceKind::GradientDescent {
                beta: need("beta", self.beta)?,
                gamma: need("gamma", self.gamma)?,
            },
            "proximal_point" => TraceKind::ProximalPoint,
            other => {
                return Err(CliError::Config(format!("unknown trace kind {other}")));
            }
        })
    }
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let text = toml::to_string(self).map_err(|e| CliError::Config(e.to_string()))?;
        std::fs::write(dir.join(MANIFEST_FILE), text)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Ok(toml::from_str(&text)?)
    }
}

pub fn write_trace(dir: &Path, file: &str, trace: &Trace) -> Result<()> {
    let out = BufWriter::new(File::create(dir.join(file))?);
    trace.write_csv(out)?;
    Ok(())
}

/// Header-only trace file for a solver row that failed before producing a
/// trace.
pub fn write_empty_trace(dir: &Path, file: &str) -> Result<()> {
    let mut w = csv::Writer::from_path(dir.join(file))?;
    w.write_record(irg_core::trace::CSV_HEADER)?;
    w.flush()?;
    Ok(())
}

pub fn opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

pub fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(|e| CliError::Config(format!("cannot create {}: {e}", dir.display())))
}
