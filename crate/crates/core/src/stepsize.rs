//! Stepsize rules for the IRG iteration.

use crate::oracle::Oracle;
use crate::{Error, Point, Result};

pub const DEFAULT_BETA: f64 = 0.7;
pub const DEFAULT_GAMMA: f64 = 0.5;
/// Artificial stepsize recorded at null iterations. Any value in (0,1) works.
pub const DEFAULT_TAU: f64 = 0.5;
pub const DEFAULT_MAX_HALVINGS: u32 = 60;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum StepsizeRule {
    /// Largest `t ∈ {1, γ, γ², …}` with `f(x + t d) ≤ f(x) − β t ‖d‖²`.
    Backtracking {
        beta: f64,
        gamma: f64,
        tau: f64,
        max_halvings: u32,
    },
    /// Fixed `t = step` with `0 < step ≤ (2 − margin) / lipschitz`.
    Constant {
        step: f64,
        lipschitz: f64,
        margin: f64,
    },
    /// `t_k = base / k^exponent`, `exponent ∈ (0, 1]`.
    Diminishing { base: f64, exponent: f64 },
    /// `t_k = ‖g‖ / (‖g‖ − ε)`, so that `x + t d = x − g`. With the Moreau
    /// envelope oracle this lands exactly on the inexact proximal point.
    ProxJump,
}

impl StepsizeRule {
    pub fn backtracking(beta: f64, gamma: f64) -> Self {
        StepsizeRule::Backtracking {
            beta,
            gamma,
            tau: DEFAULT_TAU,
            max_halvings: DEFAULT_MAX_HALVINGS,
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
        match *self {
            StepsizeRule::Backtracking {
                beta, gamma, tau, ..
            } => {
                unit("beta", beta)?;
                unit("gamma", gamma)?;
                unit("tau", tau)
            }
            StepsizeRule::Constant {
                step,
                lipschitz,
                margin,
            } => {
                if !(lipschitz > 0.0) || !(margin > 0.0 && margin < 2.0) {
                    return Err(Error::Config(
                        "constant rule needs lipschitz > 0 and margin in (0,2)".into(),
                    ));
                }
                let upper = (2.0 - margin) / lipschitz;
                if step > 0.0 && step <= upper {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "constant stepsize {step} outside admissible range (0, {upper}]"
                    )))
                }
            }
            StepsizeRule::Diminishing { base, exponent } => {
                if !(base > 0.0) {
                    return Err(Error::Config("diminishing base must be positive".into()));
                }
                if exponent > 0.0 && exponent <= 1.0 {
                    Ok(())
                } else {
                    Err(Error::Config(format!(
                        "diminishing exponent must lie in (0,1] so that the steps are not summable, got {exponent}"
                    )))
                }
            }
            StepsizeRule::ProxJump => Ok(()),
        }
    }

    /// Stepsize recorded when `d = 0`. Only backtracking defines it; the other
    /// rules use [`DEFAULT_TAU`], which is inert because it multiplies a zero
    /// direction.
    pub fn null_stepsize(&self) -> f64 {
        match *self {
            StepsizeRule::Backtracking { tau, .. } => tau,
            _ => DEFAULT_TAU,
        }
    }

    pub fn needs_values(&self) -> bool {
        matches!(self, StepsizeRule::Backtracking { .. })
    }
}

/// `x + t·d`, shared by the linesearch and by post-hoc re-evaluation so both
/// produce bit-identical trial points.
pub fn trial_point(x: &Point, d: &Point, t: f64) -> Point {
    x + d * t
}

/// The sufficient-decrease test `f(x + t d) ≤ f(x) − β t ‖d‖²`; ties accept.
pub fn armijo_accepts(f_trial: f64, f_x: f64, beta: f64, t: f64, d_norm_sq: f64) -> bool {
    f_trial <= f_x - beta * t * d_norm_sq
}

#[derive(Clone, Debug, PartialEq)]
pub struct LineSearch {
    pub step: f64,
    /// `f(x + step·d)`.
    pub value: f64,
    /// Every tested stepsize, in order; the last one is `step`.
    pub tested: Vec<f64>,
}

/// Backtracking over `t = 1, γ, γ², …, γ^max_halvings`.
///
/// `fx` is `f(x)`. A non-finite trial value counts as a rejection.
pub fn backtracking_stepsize<O: Oracle + ?Sized>(
    oracle: &O,
    x: &Point,
    fx: f64,
    d: &Point,
    beta: f64,
    gamma: f64,
    max_halvings: u32,
) -> Result<LineSearch> {
    let d_norm_sq = d.norm_squared();
    let mut t = 1.0;
    let mut tested = Vec::new();
    for halvings in 0..=max_halvings {
        tested.push(t);
        let ft = oracle.value(&trial_point(x, d, t))?;
        if armijo_accepts(ft, fx, beta, t, d_norm_sq) {
            return Ok(LineSearch {
                step: t,
                value: ft,
                tested,
            });
        }
        if halvings < max_halvings {
            t *= gamma;
        }
    }
    Err(Error::LinesearchExhausted {
        halvings: max_halvings,
        last_t: t,
    })
}

pub fn constant_stepsize(step: f64) -> f64 {
    step
}

/// `base / k^exponent` for iteration `k ≥ 1`.
pub fn diminishing_stepsize(base: f64, exponent: f64, k: usize) -> f64 {
    base / (k as f64).powf(exponent)
}

/// `‖g‖ / (‖g‖ − ε)`; only defined for `‖g‖ > ε`.
pub fn prox_jump_stepsize(gnorm: f64, eps: f64) -> f64 {
    gnorm / (gnorm - eps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::benchmarks::{ExactOracle, Quadratic};
    use crate::GradientSample;

    struct Linear(Point);

    impl Oracle for Linear {
        fn dim(&self) -> usize {
            self.0.len()
        }
        fn value(&self, x: &Point) -> Result<f64> {
            Ok(self.0.dot(x))
        }
        fn inexact_gradient(&mut self, _x: &Point, _delta: f64) -> Result<GradientSample> {
            Ok(GradientSample::plain(self.0.clone()))
        }
    }

    fn half_norm_sq(n: usize) -> ExactOracle<Quadratic> {
        ExactOracle::new(Quadratic::identity(n))
    }

    #[test]
    fn backtracking_on_half_norm() {
        // f(x) = ½‖x‖², x = (1,0), d = (−1,0), f(x) = 0.5, ‖d‖² = 1, β = 0.7:
        //   t = 1:    f = 0        vs 0.5 − 0.7   = −0.2   reject
        //   t = 0.5:  f = 0.125    vs 0.5 − 0.35  =  0.15  accept
        let o = half_norm_sq(2);
        let x = Point::from_vec(vec![1.0, 0.0]);
        let d = Point::from_vec(vec![-1.0, 0.0]);
        let ls = backtracking_stepsize(&o, &x, 0.5, &d, 0.7, 0.5, 60).unwrap();
        assert_eq!(ls.step, 0.5);
        assert_eq!(ls.tested, vec![1.0, 0.5]);
        assert_eq!(ls.value, 0.125);
    }

    #[test]
    fn linear_objective_accepts_unit_step() {
        let c = Point::from_vec(vec![1.0, -2.0, 0.5]);
        let o = Linear(c.clone());
        let x = Point::from_vec(vec![0.3, 0.1, -1.0]);
        let d = -&c;
        for beta in [0.1, 0.5, 0.99] {
            let fx = o.value(&x).unwrap();
            let ls = backtracking_stepsize(&o, &x, fx, &d, beta, 0.5, 60).unwrap();
            assert_eq!(ls.step, 1.0);
        }
    }

    #[test]
    fn exhausted_backtracking_reports_last_step() {
        // An ascent direction never passes the test.
        let o = half_norm_sq(1);
        let x = Point::from_vec(vec![1.0]);
        let d = Point::from_vec(vec![1.0]);
        let err = backtracking_stepsize(&o, &x, 0.5, &d, 0.5, 0.5, 3).unwrap_err();
        assert_eq!(
            err,
            Error::LinesearchExhausted {
                halvings: 3,
                last_t: 0.125
            }
        );
    }

    #[test]
    fn constant_rule_bounds() {
        let ok = StepsizeRule::Constant {
            step: 1.0,
            lipschitz: 1.0,
            margin: 1.0,
        };
        ok.validate().unwrap();
        assert_eq!(constant_stepsize(1.0), 1.0);

        let edge = StepsizeRule::Constant {
            step: 0.75,
            lipschitz: 2.0,
            margin: 0.5,
        };
        edge.validate().unwrap();

        let too_big = StepsizeRule::Constant {
            step: 1.1 * 0.75,
            lipschitz: 2.0,
            margin: 0.5,
        };
        assert!(too_big.validate().is_err());
    }

    #[test]
    fn diminishing_values_and_rejection() {
        assert_eq!(diminishing_stepsize(1.0, 1.0, 4), 0.25);
        assert!((diminishing_stepsize(1.0, 0.5, 100) - 0.1).abs() < 1e-15);
        let summable = StepsizeRule::Diminishing {
            base: 1.0,
            exponent: 1.5,
        };
        assert!(summable.validate().is_err());
    }

    #[test]
    fn backtracking_parameters_validated() {
        assert!(StepsizeRule::backtracking(0.7, 0.5).validate().is_ok());
        assert!(StepsizeRule::backtracking(1.0, 0.5).validate().is_err());
        assert!(StepsizeRule::backtracking(0.7, 0.0).validate().is_err());
    }

    #[test]
    fn prox_jump_lands_on_x_minus_g() {
        let g = Point::from_vec(vec![3.0, 4.0]);
        let eps = 2.5;
        let d = crate::direction::reduced_direction(&g, eps).unwrap();
        let t = prox_jump_stepsize(g.norm(), eps);
        let x = Point::from_vec(vec![1.0, 1.0]);
        let moved = trial_point(&x, &d, t);
        assert!((moved - (&x - &g)).norm() < 1e-14);
    }
}
