//! Oracle interface shared by every solver.

use crate::{Error, Point, Result};

/// Inner-solver telemetry attached to a gradient sample when the gradient is
/// itself the output of an iterative method (the LAD envelope oracle).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerStats {
    pub iters: usize,
    pub gap: f64,
    pub omega: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradientSample {
    pub g: Point,
    pub inner: Option<InnerStats>,
}

impl GradientSample {
    pub fn plain(g: Point) -> Self {
        Self { g, inner: None }
    }
}

/// Value and gradient access for one problem instance.
///
/// `inexact_gradient(x, delta)` must return `g` with `‖g − ∇f(x)‖ ≤ delta`.
/// An implementation that cannot honour a requested bound returns
/// [`Error::AccuracyUnattainable`] instead of a weaker approximation.
///
/// The exact-gradient channel is optional. IRG solvers only use it for
/// telemetry and for the exact-gradient stopping test; the iteration itself is
/// driven by `inexact_gradient` alone.
pub trait Oracle {
    fn dim(&self) -> usize;

    /// Objective value used by linesearches.
    fn value(&self, x: &Point) -> Result<f64>;

    /// Value recorded in traces. Defaults to [`Oracle::value`]; the LAD
    /// envelope oracle reports the original L1 objective instead.
    fn reported_value(&self, x: &Point) -> Result<f64> {
        self.value(x)
    }

    fn inexact_gradient(&mut self, x: &Point, delta: f64) -> Result<GradientSample>;

    fn has_exact_gradient(&self) -> bool {
        false
    }

    fn exact_gradient(&self, _x: &Point) -> Result<Point> {
        Err(Error::ExactGradientUnavailable)
    }
}

impl<O: Oracle + ?Sized> Oracle for &mut O {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, x: &Point) -> Result<f64> {
        (**self).value(x)
    }
    fn reported_value(&self, x: &Point) -> Result<f64> {
        (**self).reported_value(x)
    }
    fn inexact_gradient(&mut self, x: &Point, delta: f64) -> Result<GradientSample> {
        (**self).inexact_gradient(x, delta)
    }
    fn has_exact_gradient(&self) -> bool {
        (**self).has_exact_gradient()
    }
    fn exact_gradient(&self, x: &Point) -> Result<Point> {
        (**self).exact_gradient(x)
    }
}

/// Routes the inexact channel to the exact gradient of the wrapped oracle.
///
/// Running IRG through this adapter gives the exact reduced gradient method.
pub struct ExactChannel<'a, O: Oracle + ?Sized>(pub &'a O);

impl<O: Oracle + ?Sized> Oracle for ExactChannel<'_, O> {
    fn dim(&self) -> usize {
        self.0.dim()
    }
    fn value(&self, x: &Point) -> Result<f64> {
        self.0.value(x)
    }
    fn reported_value(&self, x: &Point) -> Result<f64> {
        self.0.reported_value(x)
    }
    fn inexact_gradient(&mut self, x: &Point, _delta: f64) -> Result<GradientSample> {
        self.0.exact_gradient(x).map(GradientSample::plain)
    }
    fn has_exact_gradient(&self) -> bool {
        self.0.has_exact_gradient()
    }
    fn exact_gradient(&self, x: &Point) -> Result<Point> {
        self.0.exact_gradient(x)
    }
}
