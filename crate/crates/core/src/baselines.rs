//! Baselines: gradient descent with backtracking, the exact reduced gradient
//! method and the inexact proximal point method.

use std::time::{Duration, Instant};

use crate::config::RunConfig;
use crate::direction::run_irg;
use crate::lad::{LadProblem, ProxSolver, DEFAULT_MAX_INNER};
use crate::oracle::{ExactChannel, Oracle};
use crate::stepsize::{backtracking_stepsize, trial_point, DEFAULT_MAX_HALVINGS};
use crate::trace::{IterationRecord, RunStatus, Terminal, Trace, TraceKind, DEFAULT_DIMENSION_CAP};
use crate::{check_dim, Error, Point, Result};

/// Classical gradient descent, `d = −∇f(x)`, with the backtracking rule and
/// the stopping test `‖∇f(x)‖ ≤ ν`.
pub fn gd_backtracking_run<O: Oracle + ?Sized>(
    oracle: &O,
    x1: Point,
    beta: f64,
    gamma: f64,
    nu: f64,
    max_iterations: usize,
) -> Result<Trace> {
    if !oracle.has_exact_gradient() {
        return Err(Error::ExactGradientUnavailable);
    }
    check_dim(oracle.dim(), x1.len())?;
    let start = Instant::now();
    let mut trace = Trace::new("GD", TraceKind::GradientDescent { beta, gamma });
    let keep = trace.keeps_vectors(x1.len());
    let mut x = x1;
    let mut fx = oracle.value(&x)?;
    let status = loop {
        let grad = oracle.exact_gradient(&x)?;
        let gnorm = grad.norm();
        if gnorm <= nu {
            break RunStatus::GradientTest;
        }
        if trace.len() >= max_iterations {
            break RunStatus::BudgetExhausted;
        }
        let d = -&grad;
        let ls = backtracking_stepsize(oracle, &x, fx, &d, beta, gamma, DEFAULT_MAX_HALVINGS)?;
        let mut rec = IterationRecord::bare(trace.len() + 1, fx, ls.step, gnorm, gnorm);
        rec.exact_grad_norm = Some(gnorm);
        rec.dg_norm = Some(0.0);
        let next = trial_point(&x, &d, ls.step);
        if keep {
            rec.x = Some(x);
            rec.g = Some(grad);
            rec.d = Some(d);
        }
        trace.record_iteration(rec)?;
        x = next;
        fx = ls.value;
    };
    let gnorm = oracle.exact_gradient(&x)?.norm();
    trace.terminal = Some(Terminal {
        x: keep.then_some(x),
        fval: fx,
        eps: None,
        r: None,
        exact_grad_norm: Some(gnorm),
    });
    trace.status = status;
    trace.wall_time = start.elapsed();
    Ok(trace)
}

/// The reduced gradient method: IRG driven by exact gradients.
pub fn rg_run<O: Oracle + ?Sized>(config: &RunConfig, oracle: &O, x1: Point) -> Result<Trace> {
    if !oracle.has_exact_gradient() {
        return Err(Error::ExactGradientUnavailable);
    }
    let mut exact = ExactChannel(oracle);
    run_irg(config, &mut exact, x1, "RGB")
}

/// `ω_k = scale / k^power`. Powers above 2 make `δ_k = √(2ω_k)` summable.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OmegaSchedule {
    pub scale: f64,
    pub power: f64,
}

impl OmegaSchedule {
    pub fn power(power: f64) -> Self {
        Self { scale: 1.0, power }
    }

    pub fn omega(&self, k: usize) -> f64 {
        self.scale / (k as f64).powf(self.power)
    }

    /// Prox-distance bound implied by the gap tolerance.
    pub fn delta(&self, k: usize) -> f64 {
        (2.0 * self.omega(k)).sqrt()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct IppmConfig {
    pub omega: OmegaSchedule,
    pub max_iterations: usize,
    /// Stop once `‖Ax − b‖₁` drops to this value.
    pub target_fval: Option<f64>,
    pub wall_clock: Option<Duration>,
    pub warm_start: bool,
    pub max_inner: usize,
}

impl IppmConfig {
    pub fn new(power: f64, max_iterations: usize) -> Self {
        Self {
            omega: OmegaSchedule::power(power),
            max_iterations,
            target_fval: None,
            wall_clock: None,
            warm_start: true,
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega.scale > 0.0 && self.omega.power > 0.0 {
            Ok(())
        } else {
            Err(Error::Config(
                "omega schedule needs scale > 0 and power > 0".into(),
            ))
        }
    }
}

/// Inexact proximal point method with unit proximal parameter:
/// `x^{k+1} = p^k`, `φ_{x^k}(p^k) ≤ min φ_{x^k} + ω_k`.
///
/// Records use `g = x − p`, `d = p − x`, `t = 1` and `δ_k = √(2ω_k)`.
pub fn ippm_run(
    problem: &LadProblem,
    x1: Point,
    config: &IppmConfig,
    solver: &str,
) -> Result<Trace> {
    config.validate()?;
    check_dim(problem.n(), x1.len())?;
    let start = Instant::now();
    let mut prox = ProxSolver::new(problem);
    prox.max_inner = config.max_inner;
    let mut trace = Trace::new(solver, TraceKind::ProximalPoint);
    let keep = x1.len() <= DEFAULT_DIMENSION_CAP;
    let mut x = x1;
    let mut fx = problem.value(&x)?;
    let mut warm: Option<Point> = None;
    let status = loop {
        if config.target_fval.is_some_and(|t| fx <= t) {
            break RunStatus::TargetReached;
        }
        if trace.len() >= config.max_iterations {
            break RunStatus::BudgetExhausted;
        }
        if config.wall_clock.is_some_and(|cap| start.elapsed() >= cap) {
            break RunStatus::WallClock;
        }
        let k = trace.len() + 1;
        let omega = config.omega.omega(k);
        let res = prox.solve(
            &x,
            omega,
            if config.warm_start {
                warm.as_ref()
            } else {
                None
            },
        )?;
        let g = &x - &res.p;
        let d = -&g;
        let gnorm = g.norm();
        let mut rec = IterationRecord::bare(k, fx, 1.0, gnorm, gnorm);
        rec.delta = Some(config.omega.delta(k));
        rec.dg_norm = Some(0.0);
        rec.inner = Some(res.stats(omega));
        if keep {
            rec.x = Some(x.clone());
            rec.g = Some(g);
            rec.d = Some(d);
        }
        trace.record_iteration(rec)?;
        if config.warm_start {
            warm = Some(res.dual.u);
        }
        x = res.p;
        fx = problem.value(&x)?;
    };
    trace.terminal = Some(Terminal {
        x: keep.then_some(x),
        fval: fx,
        eps: None,
        r: None,
        exact_grad_norm: None,
    });
    trace.status = status;
    trace.wall_time = start.elapsed();
    Ok(trace)
}
