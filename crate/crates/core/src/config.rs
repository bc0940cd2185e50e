//! Run configuration shared by the IRG and RG solvers.

use std::time::Duration;

use crate::benchmarks::rho_schedule_log;
use crate::stepsize::StepsizeRule;
use crate::trace::DEFAULT_DIMENSION_CAP;
use crate::{Error, Result};

/// Manually controlled error sequence `ρ_k`.
///
/// Every schedule returns a positive value except `Constant(0.0)`, which is
/// accepted and requests exact gradients from the oracle.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum RhoSchedule {
    Constant(f64),
    /// `1 / ln(k + 1)`.
    InverseLog,
    /// `scale / k^power`.
    InversePower {
        scale: f64,
        power: f64,
    },
    /// `ρ_k = ε_k`, which reduces the gradient condition to `‖g − ∇f‖ ≤ ε_k`.
    EpsMirror,
}

impl RhoSchedule {
    pub fn value(&self, k: usize, eps: f64) -> f64 {
        match *self {
            RhoSchedule::Constant(c) => c,
            RhoSchedule::InverseLog => rho_schedule_log(k),
            RhoSchedule::InversePower { scale, power } => scale / (k as f64).powf(power),
            RhoSchedule::EpsMirror => eps,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            RhoSchedule::Constant(c) if !(c >= 0.0 && c.is_finite()) => Err(Error::Config(
                format!("constant rho must be finite and >= 0, got {c}"),
            )),
            RhoSchedule::InversePower { scale, power } if !(scale > 0.0 && power > 0.0) => Err(
                Error::Config("inverse-power rho needs scale > 0 and power > 0".into()),
            ),
            _ => Ok(()),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum StopMode {
    /// Stop on a null iteration with `r_k + 2ε_k ≤ ν`; needs no exact gradient.
    Certified,
    /// Stop when `‖∇f(x^k)‖ ≤ ν`; requires an oracle with exact gradients.
    ExactGradient,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Stopping {
    pub mode: StopMode,
    pub nu: f64,
    pub max_iterations: usize,
    /// Stop once the reported value drops to this level.
    pub target_value: Option<f64>,
    pub wall_clock: Option<Duration>,
}

impl Stopping {
    pub fn certified(nu: f64, max_iterations: usize) -> Self {
        Self {
            mode: StopMode::Certified,
            nu,
            max_iterations,
            target_value: None,
            wall_clock: None,
        }
    }

    pub fn exact(nu: f64, max_iterations: usize) -> Self {
        Self {
            mode: StopMode::ExactGradient,
            ..Self::certified(nu, max_iterations)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub eps1: f64,
    pub r1: f64,
    pub theta: f64,
    pub mu: f64,
    pub rho: RhoSchedule,
    pub rule: StepsizeRule,
    pub stopping: Stopping,
    pub seed: u64,
    pub dimension_cap: usize,
    /// Record `‖∇f(x^k)‖` when the oracle exposes exact gradients.
    pub record_exact: bool,
}

impl RunConfig {
    /// Settings of the smooth benchmark comparison: backtracking with
    /// β = 0.7, γ = 0.5, ε₁ = r₁ = 5, θ = μ = 0.7, ρ_k = 1/ln(k+1), and the
    /// exact-gradient stopping test.
    pub fn benchmark_defaults(nu: f64) -> Self {
        Self {
            eps1: 5.0,
            r1: 5.0,
            theta: 0.7,
            mu: 0.7,
            rho: RhoSchedule::InverseLog,
            rule: StepsizeRule::backtracking(0.7, 0.5),
            stopping: Stopping::exact(nu, 1_000_000),
            seed: 0,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            record_exact: true,
        }
    }

    /// Settings of the LAD comparison: ε₁ = 10, θ = μ = 0.5, ρ_k = ε_k and the
    /// proximal-jump stepsize.
    pub fn lad_defaults(r1: f64) -> Self {
        Self {
            eps1: 10.0,
            r1,
            theta: 0.5,
            mu: 0.5,
            rho: RhoSchedule::EpsMirror,
            rule: StepsizeRule::ProxJump,
            stopping: Stopping::certified(1e-6, 10_000),
            seed: 0,
            dimension_cap: DEFAULT_DIMENSION_CAP,
            record_exact: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let unit = |name: &str, v: f64| {
            if v > 0.0 && v < 1.0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must lie in (0,1), got {v}")))
            }
        };
        unit("theta", self.theta)?;
        unit("mu", self.mu)?;
        if !(self.eps1 > 0.0 && self.eps1.is_finite()) || !(self.r1 > 0.0 && self.r1.is_finite()) {
            return Err(Error::Config(
                "initial radii must be positive and finite".into(),
            ));
        }
        if !(self.stopping.nu > 0.0) {
            return Err(Error::Config(format!(
                "stopping tolerance nu must be positive, got {}",
                self.stopping.nu
            )));
        }
        self.rho.validate()?;
        self.rule.validate()
    }
}
