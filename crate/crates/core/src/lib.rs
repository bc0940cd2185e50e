//! Inexact reduced gradient (IRG) methods for smooth nonconvex minimization.
//!
//! The crate is organised around a small number of pieces:
//!
//! * [`oracle`]: the [`Oracle`] trait through which solvers obtain values and
//!   error-bounded gradient approximations.
//! * [`direction`]: the IRG master loop (radius reduction, reduced direction,
//!   certified stopping).
//! * [`stepsize`]: backtracking, constant, diminishing and proximal-jump rules.
//! * [`baselines`]: gradient descent, the exact reduced gradient method and the
//!   inexact proximal point method.
//! * [`lad`]: least absolute deviations fitting through the Moreau envelope,
//!   with a duality-gap certified inner solver.
//! * [`benchmarks`]: Dixon & Price, Rosenbrock and quadratic test objectives,
//!   noisy gradient oracles and a finite-difference checker.
//! * [`diagnostics`]: post-hoc checks of traces against the structural
//!   properties of the method, plus linear-rate estimation.
//! * [`trace`]: per-iteration telemetry and CSV export.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod baselines;
pub mod benchmarks;
pub mod config;
pub mod diagnostics;
pub mod direction;
mod error;
pub mod lad;
pub mod oracle;
pub mod stepsize;
pub mod trace;

pub use config::{RhoSchedule, RunConfig, StopMode, Stopping};
pub use error::{Error, Result};
pub use oracle::{GradientSample, InnerStats, Oracle};
pub use stepsize::StepsizeRule;
pub use trace::{IterationRecord, RunStatus, Summary, Trace, TraceKind};

/// Dense real vector used for iterates, gradients and directions.
pub type Point = nalgebra::DVector<f64>;

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, got })
    }
}
