//! The IRG master loop: inexact gradient acquisition, radius reduction,
//! reduced direction, update and certified stopping.

use std::time::Instant;

use crate::config::{RunConfig, StopMode};
use crate::oracle::Oracle;
use crate::stepsize::{
    backtracking_stepsize, diminishing_stepsize, prox_jump_stepsize, trial_point, StepsizeRule,
};
use crate::trace::{IterationRecord, RunStatus, Terminal, Trace, TraceKind};
use crate::{check_dim, Error, Point, Result};

/// `min(ε, ρ)`, the error bound requested from the oracle.
pub fn effective_error(eps: f64, rho: f64) -> f64 {
    eps.min(rho)
}

/// Null test `‖g‖ ≤ r + ε`. The tie is a null iteration.
pub fn is_null_iteration(g: &Point, eps: f64, r: f64) -> bool {
    g.norm() <= r + eps
}

/// `d = −(‖g‖ − ε)/‖g‖ · g`, i.e. minus the projection of the origin onto the
/// ball `B(g, ε)`.
pub fn reduced_direction(g: &Point, eps: f64) -> Result<Point> {
    let gnorm = g.norm();
    if gnorm <= eps {
        return Err(Error::DirectionPrecondition { gnorm, eps });
    }
    Ok(g * (-(gnorm - eps) / gnorm))
}

/// On a null iteration `‖∇f(x)‖ ≤ ‖g‖ + ε ≤ r + 2ε`, so `r + 2ε ≤ ν`
/// certifies `‖∇f(x)‖ ≤ ν` without touching the exact gradient.
pub fn certified_stop(null: bool, eps: f64, r: f64, nu: f64) -> bool {
    null && r + 2.0 * eps <= nu
}

/// Mutable state of the master algorithm.
#[derive(Clone, Debug, PartialEq)]
pub struct IrgState {
    pub x: Point,
    pub eps: f64,
    pub r: f64,
    /// 1-based index of the next iteration.
    pub k: usize,
    pub null_run_length: usize,
    pub null_count: usize,
    /// Reported value at `x`.
    pub fval: f64,
    /// Objective value at `x`, cached when a linesearch has computed it.
    objective: Option<f64>,
}

impl IrgState {
    pub fn new<O: Oracle + ?Sized>(x1: Point, eps1: f64, r1: f64, oracle: &O) -> Result<Self> {
        check_dim(oracle.dim(), x1.len())?;
        let fval = oracle.reported_value(&x1)?;
        Ok(Self {
            x: x1,
            eps: eps1,
            r: r1,
            k: 1,
            null_run_length: 0,
            null_count: 0,
            fval,
            objective: None,
        })
    }
}

/// One full iteration. Returns the successor state and the record of
/// iteration `state.k`. The record's `exact_grad_norm` is left empty.
pub fn irg_step<O: Oracle + ?Sized>(
    state: &IrgState,
    oracle: &mut O,
    rho: f64,
    config: &RunConfig,
) -> Result<(IrgState, IterationRecord)> {
    let n = state.x.len();
    let delta = effective_error(state.eps, rho);
    let sample = oracle.inexact_gradient(&state.x, delta)?;
    let g = sample.g;
    check_dim(n, g.len())?;
    let gnorm = g.norm();
    let null = gnorm <= state.r + state.eps;

    let mut next = state.clone();
    next.k += 1;
    let (d, t) = if null {
        next.eps = config.theta * state.eps;
        next.r = config.mu * state.r;
        next.null_run_length += 1;
        next.null_count += 1;
        (Point::zeros(n), config.rule.null_stepsize())
    } else {
        let d = reduced_direction(&g, state.eps)?;
        next.null_run_length = 0;
        let t = match config.rule {
            StepsizeRule::Backtracking {
                beta,
                gamma,
                max_halvings,
                ..
            } => {
                let fx = match state.objective {
                    Some(v) => v,
                    None => oracle.value(&state.x)?,
                };
                let ls =
                    backtracking_stepsize(&*oracle, &state.x, fx, &d, beta, gamma, max_halvings)?;
                next.objective = Some(ls.value);
                ls.step
            }
            StepsizeRule::Constant { step, .. } => step,
            StepsizeRule::Diminishing { base, exponent } => {
                diminishing_stepsize(base, exponent, state.k)
            }
            StepsizeRule::ProxJump => prox_jump_stepsize(gnorm, state.eps),
        };
        if !matches!(config.rule, StepsizeRule::Backtracking { .. }) {
            next.objective = None;
        }
        next.x = trial_point(&state.x, &d, t);
        next.fval = oracle.reported_value(&next.x)?;
        (d, t)
    };

    let dnorm = d.norm();
    let dg_norm = (&d + &g).norm();
    let keep = n <= config.dimension_cap;
    let record = IterationRecord {
        k: state.k,
        x: keep.then(|| state.x.clone()),
        g: keep.then(|| g.clone()),
        d: keep.then_some(d),
        t,
        eps: Some(state.eps),
        r: Some(state.r),
        delta: Some(delta),
        null_flag: null,
        fval: state.fval,
        gnorm,
        dnorm,
        dg_norm: Some(dg_norm),
        exact_grad_norm: None,
        inner: sample.inner,
    };
    Ok((next, record))
}

/// Runs the master algorithm from `x1` until a stopping criterion fires.
///
/// Running out of iterations or wall-clock time is not an error: the trace is
/// returned with the corresponding [`RunStatus`].
pub fn run_irg<O: Oracle + ?Sized>(
    config: &RunConfig,
    oracle: &mut O,
    x1: Point,
    solver: &str,
) -> Result<Trace> {
    config.validate()?;
    let exact_mode = config.stopping.mode == StopMode::ExactGradient;
    if exact_mode && !oracle.has_exact_gradient() {
        return Err(Error::Config(
            "exact-gradient stopping needs an oracle with exact gradients".into(),
        ));
    }
    let want_exact = oracle.has_exact_gradient() && (config.record_exact || exact_mode);
    let nu = config.stopping.nu;

    let start = Instant::now();
    let mut trace = Trace::new(
        solver,
        TraceKind::ReducedGradient {
            theta: config.theta,
            mu: config.mu,
            rule: config.rule,
        },
    )
    .with_dimension_cap(config.dimension_cap);
    let mut state = IrgState::new(x1, config.eps1, config.r1, &*oracle)?;

    let status = loop {
        let exact_norm = if want_exact {
            Some(oracle.exact_gradient(&state.x)?.norm())
        } else {
            None
        };
        if exact_mode && exact_norm.is_some_and(|g| g <= nu) {
            break RunStatus::GradientTest;
        }
        if config
            .stopping
            .target_value
            .is_some_and(|t| state.fval <= t)
        {
            break RunStatus::TargetReached;
        }
        if trace.len() >= config.stopping.max_iterations {
            break RunStatus::BudgetExhausted;
        }
        if config
            .stopping
            .wall_clock
            .is_some_and(|cap| start.elapsed() >= cap)
        {
            break RunStatus::WallClock;
        }

        let rho = config.rho.value(state.k, state.eps);
        let (next, mut record) = irg_step(&state, oracle, rho, config)?;
        record.exact_grad_norm = exact_norm;
        let certified = certified_stop(record.null_flag, state.eps, state.r, nu) && !exact_mode;
        trace.record_iteration(record)?;
        state = next;
        if certified {
            break RunStatus::Certified;
        }
    };

    let exact_norm = if want_exact {
        Some(oracle.exact_gradient(&state.x)?.norm())
    } else {
        None
    };
    trace.terminal = Some(Terminal {
        x: trace.keeps_vectors(state.x.len()).then(|| state.x.clone()),
        fval: state.fval,
        eps: Some(state.eps),
        r: Some(state.r),
        exact_grad_norm: exact_norm,
    });
    trace.status = status;
    trace.wall_time = start.elapsed();
    Ok(trace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{ExactOracle, Quadratic};
    use crate::config::{RhoSchedule, Stopping};
    use crate::oracle::GradientSample;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn p(v: &[f64]) -> Point {
        Point::from_vec(v.to_vec())
    }

    /// Returns a fixed gradient regardless of `x`.
    struct Scripted(Point);

    impl Oracle for Scripted {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, _x: &Point) -> Result<f64> {
            Ok(0.0)
        }
        fn inexact_gradient(&mut self, _x: &Point, _delta: f64) -> Result<GradientSample> {
            Ok(GradientSample::plain(self.0.clone()))
        }
    }

    /// Generic Euclidean projection onto a ball, independent of the
    /// closed-form direction.
    fn project_onto_ball(point: &Point, center: &Point, radius: f64) -> Point {
        let offset = point - center;
        let dist = offset.norm();
        if dist <= radius {
            point.clone()
        } else {
            center + offset * (radius / dist)
        }
    }

    fn constant_config(step: f64, theta: f64, mu: f64, eps1: f64, r1: f64) -> RunConfig {
        RunConfig {
            eps1,
            r1,
            theta,
            mu,
            rho: RhoSchedule::EpsMirror,
            rule: StepsizeRule::Constant {
                step,
                lipschitz: 1.0,
                margin: 1.0,
            },
            stopping: Stopping::certified(1e-6, 1000),
            ..RunConfig::benchmark_defaults(1e-6)
        }
    }

    #[test]
    fn effective_error_examples() {
        assert_eq!(effective_error(4e-3, 2e-3), 2e-3);
        assert_eq!(effective_error(1.0, 1.0), 1.0);
        let rho1 = crate::benchmarks::rho_schedule_log(1);
        assert_eq!(effective_error(0.5, rho1), 0.5);
    }

    #[test]
    fn null_test_examples() {
        assert!(is_null_iteration(&p(&[2.0, 0.0]), 1.0, 1.5));
        assert!(!is_null_iteration(&p(&[3.0, 0.0]), 1.0, 1.0));
        assert!(is_null_iteration(&p(&[0.0, 0.0]), 1e-9, 1e-9));
    }

    #[test]
    fn reduced_direction_examples() {
        assert_eq!(
            reduced_direction(&p(&[3.0, 0.0]), 1.0).unwrap(),
            p(&[-2.0, 0.0])
        );
        assert_eq!(
            reduced_direction(&p(&[0.0, 4.0]), 4.0).unwrap_err(),
            Error::DirectionPrecondition {
                gnorm: 4.0,
                eps: 4.0
            }
        );
        let g = p(&[3.0, 4.0]);
        let d = reduced_direction(&g, 2.5).unwrap();
        let proj = project_onto_ball(&Point::zeros(2), &g, 2.5);
        assert!((&d + &proj).norm() < 1e-15);
        assert!((d - p(&[-1.5, -2.0])).norm() < 1e-15);
    }

    #[test]
    fn certified_stop_examples() {
        assert!(certified_stop(true, 2e-4, 3e-4, 1e-3));
        assert!(!certified_stop(false, 1e-9, 1e-9, 1.0));
        assert!(!certified_stop(true, 1.0, 1.0, 0.01));
    }

    #[test]
    fn null_branch_reduces_radii() {
        let mut o = Scripted(p(&[0.5, 0.0]));
        let cfg = constant_config(1.0, 0.5, 0.5, 1.0, 2.0);
        let s = IrgState::new(p(&[4.0, 4.0]), 1.0, 2.0, &o).unwrap();
        let (next, rec) = irg_step(&s, &mut o, 1.0, &cfg).unwrap();
        assert_eq!(next.eps, 0.5);
        assert_eq!(next.r, 1.0);
        assert_eq!(next.x, s.x);
        assert!(rec.null_flag);
        assert_eq!(rec.t, crate::stepsize::DEFAULT_TAU);
        assert_eq!(next.null_run_length, 1);
    }

    #[test]
    fn non_null_branch_moves() {
        let mut o = Scripted(p(&[3.0, 0.0]));
        let cfg = constant_config(1.0, 0.5, 0.5, 1.0, 1.0);
        let s = IrgState::new(p(&[1.0, 1.0]), 1.0, 1.0, &o).unwrap();
        let (next, rec) = irg_step(&s, &mut o, 1.0, &cfg).unwrap();
        assert_eq!(next.x, p(&[-1.0, 1.0]));
        assert_eq!((next.eps, next.r), (1.0, 1.0));
        assert!(!rec.null_flag);
        assert_eq!(rec.dnorm, 2.0);
    }

    #[test]
    fn boundary_tie_is_null() {
        // ½‖x‖² at (10, 0): ‖∇f‖ = 10 = r₁ + ε₁.
        let mut o = ExactOracle::new(Quadratic::identity(2));
        let cfg = constant_config(1.0, 0.5, 0.5, 5.0, 5.0);
        let s = IrgState::new(p(&[10.0, 0.0]), 5.0, 5.0, &o).unwrap();
        let (next, rec) = irg_step(&s, &mut o, 5.0, &cfg).unwrap();
        assert!(rec.null_flag);
        assert_eq!(next.x, s.x);
    }

    #[test]
    fn stationary_start_certifies() {
        let mut o = ExactOracle::new(Quadratic::identity(3));
        let mut cfg = constant_config(1.0, 0.5, 0.7, 1.0, 1.0);
        cfg.stopping.nu = 1e-3;
        let trace = run_irg(&cfg, &mut o, Point::zeros(3), "irg").unwrap();
        assert_eq!(trace.status, RunStatus::Certified);
        assert!(trace.records.iter().all(|r| r.null_flag));
        // Radii follow the geometric reduction exactly.
        for (i, rec) in trace.records.iter().enumerate() {
            assert_relative_eq!(
                rec.eps.unwrap(),
                0.5f64.powi(i as i32),
                max_relative = 1e-12
            );
            assert_relative_eq!(rec.r.unwrap(), 0.7f64.powi(i as i32), max_relative = 1e-12);
        }
        let last = trace.records.last().unwrap();
        assert!(last.r.unwrap() + 2.0 * last.eps.unwrap() <= 1e-3);
    }

    #[test]
    fn constant_step_monotone_on_quadratic() {
        let q = Quadratic::with_condition_number(2, 4.0, 1);
        let l = q.lipschitz();
        let mut o = ExactOracle::new(q);
        let mut cfg = constant_config(1.0 / l, 0.5, 0.7, 1.0, 1.0);
        cfg.rule = StepsizeRule::Constant {
            step: 1.0 / l,
            lipschitz: l,
            margin: 1.0,
        };
        let trace = run_irg(&cfg, &mut o, p(&[3.0, -2.0]), "irg").unwrap();
        assert_eq!(trace.status, RunStatus::Certified);
        let f: Vec<f64> = trace.records.iter().map(|r| r.fval).collect();
        for (i, w) in f.windows(2).enumerate() {
            assert!(w[1] <= w[0]);
            // f(x^{k+1}) ≤ f(x^k) − (δ/2) t ‖d‖² with δ = 1
            let rec = &trace.records[i];
            assert!(w[0] - w[1] >= 0.5 * rec.t * rec.dnorm * rec.dnorm - 1e-12);
        }
    }

    #[test]
    fn budget_exhaustion_is_not_an_error() {
        let mut o = ExactOracle::new(Quadratic::identity(2));
        let mut cfg = constant_config(0.01, 0.5, 0.7, 0.1, 0.1);
        cfg.stopping.max_iterations = 5;
        let trace = run_irg(&cfg, &mut o, p(&[100.0, 100.0]), "irg").unwrap();
        assert_eq!(trace.status, RunStatus::BudgetExhausted);
        assert_eq!(trace.len(), 5);
    }

    #[test]
    fn exact_mode_requires_exact_gradients() {
        let mut o = Scripted(p(&[1.0]));
        let mut cfg = constant_config(1.0, 0.5, 0.7, 1.0, 1.0);
        cfg.stopping.mode = StopMode::ExactGradient;
        assert!(matches!(
            run_irg(&cfg, &mut o, p(&[0.0]), "irg"),
            Err(Error::Config(_))
        ));
    }

    proptest! {
        #[test]
        fn direction_is_negative_ball_projection(
            g in proptest::collection::vec(-10.0f64..10.0, 1..6),
            frac in 0.01f64..0.99,
        ) {
            let g = Point::from_vec(g);
            let gnorm = g.norm();
            prop_assume!(gnorm > 1e-6);
            let eps = frac * gnorm;
            let d = reduced_direction(&g, eps).unwrap();
            let proj = project_onto_ball(&Point::zeros(g.len()), &g, eps);
            prop_assert!((&d + &proj).norm() <= 1e-12 * gnorm);
            prop_assert!(((&d + &g).norm() - eps).abs() <= 1e-12 * gnorm);
            prop_assert!(d.norm() <= gnorm);
        }

        #[test]
        fn effective_error_is_min(eps in 1e-9f64..10.0, rho in 1e-9f64..10.0) {
            let delta = effective_error(eps, rho);
            prop_assert!(delta <= eps && delta <= rho);
            prop_assert!(delta == eps || delta == rho);
        }
    }
}
