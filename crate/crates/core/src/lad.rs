//! Least absolute deviations fitting, `min ‖Ax − b‖₁`, through the Moreau
//! envelope `e(x) = min_y ‖Ay − b‖₁ + ½‖y − x‖²`.
//!
//! The proximal subproblem is solved on its dual
//!
//! ```text
//! D(u) = ⟨u, Ax − b⟩ − ½‖Aᵀu‖²,   ‖u‖_∞ ≤ 1,
//! ```
//!
//! obtained from `‖z‖₁ = max_{‖u‖_∞ ≤ 1} ⟨u, z⟩`, with primal recovery
//! `y(u) = x − Aᵀu`. Accelerated projected gradient runs on `−D` and stops as
//! soon as the duality gap `φ_x(y(u)) − D(u)` drops below the requested
//! tolerance `ω`. Since `φ_x` is 1-strongly convex, a gap of `ω` places `y(u)`
//! within `√(2ω)` of the exact proximal point.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::config::RunConfig;
use crate::direction::run_irg;
use crate::oracle::{GradientSample, InnerStats, Oracle};
use crate::stepsize::StepsizeRule;
use crate::trace::{fmt_f64, Trace};
use crate::{check_dim, Error, Point, Result};

pub const POWER_ITERATIONS: usize = 50;
pub const POWER_TOLERANCE: f64 = 1e-8;
/// Applied to the power-iteration estimate, which approaches the top
/// eigenvalue from below.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;
pub const DEFAULT_MAX_INNER: usize = 1_000_000;
/// Gap tolerance used when the oracle is asked for envelope values.
pub const VALUE_OMEGA: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LadProblem {
    pub a: DMatrix<f64>,
    pub b: Point,
}

impl LadProblem {
    pub fn new(a: DMatrix<f64>, b: Point) -> Result<Self> {
        if a.nrows() == 0 || a.ncols() == 0 {
            return Err(Error::Config("LAD matrix must be at least 1x1".into()));
        }
        check_dim(a.nrows(), b.len())?;
        if a.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Config("LAD data must be finite".into()));
        }
        Ok(Self { a, b })
    }

    pub fn m(&self) -> usize {
        self.a.nrows()
    }

    pub fn n(&self) -> usize {
        self.a.ncols()
    }

    /// `‖Ax − b‖₁`.
    pub fn value(&self, x: &Point) -> Result<f64> {
        check_dim(self.n(), x.len())?;
        Ok((&self.a * x - &self.b).lp_norm(1))
    }

    /// `φ_x(y) = ‖Ay − b‖₁ + ½‖y − x‖²`.
    pub fn phi(&self, anchor: &Point, y: &Point) -> Result<f64> {
        check_dim(self.n(), anchor.len())?;
        Ok(self.value(y)? + 0.5 * (y - anchor).norm_squared())
    }

    /// `D(u) = ⟨u, Ax − b⟩ − ½‖Aᵀu‖²`.
    pub fn dual_value(&self, anchor: &Point, u: &Point) -> Result<f64> {
        check_dim(self.n(), anchor.len())?;
        check_dim(self.m(), u.len())?;
        let c = &self.a * anchor - &self.b;
        Ok(u.dot(&c) - 0.5 * self.a.tr_mul(u).norm_squared())
    }

    /// Reads the text format: a header line `m n`, then the `m·n` entries of
    /// `A` in row-major order, then the `m` entries of `b`. Whitespace between
    /// numbers is free-form.
    pub fn read_text<R: Read>(mut input: R) -> Result<Self> {
        let mut text = String::new();
        input.read_to_string(&mut text)?;
        let mut tokens = text.split_whitespace();
        let mut dim = |what: &str| -> Result<usize> {
            tokens
                .next()
                .ok_or_else(|| Error::Parse(format!("missing {what}")))?
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("{what}: {e}")))
        };
        let m = dim("m")?;
        let n = dim("n")?;
        let values: Vec<f64> = tokens
            .map(|t| {
                t.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("`{t}`: {e}")))
            })
            .collect::<Result<_>>()?;
        if values.len() != m * n + m {
            return Err(Error::Parse(format!(
                "expected {} numbers after the header, found {}",
                m * n + m,
                values.len()
            )));
        }
        let a = DMatrix::from_row_slice(m, n, &values[..m * n]);
        let b = Point::from_column_slice(&values[m * n..]);
        Self::new(a, b)
    }

    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.m(), self.n())?;
        for i in 0..self.m() {
            let row: Vec<String> = self.a.row(i).iter().map(|&v| fmt_f64(v)).collect();
            writeln!(out, "{}", row.join(" "))?;
        }
        let b: Vec<String> = self.b.iter().map(|&v| fmt_f64(v)).collect();
        writeln!(out, "{}", b.join(" "))?;
        Ok(())
    }
}

pub fn lad_value(problem: &LadProblem, x: &Point) -> Result<f64> {
    problem.value(x)
}

/// `A` and `b` with i.i.d. standard normal entries; `A` is drawn row by row,
/// then `b`.
pub fn generate_gaussian_instance(m: usize, n: usize, seed: u64) -> Result<LadProblem> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = || rng.sample::<f64, _>(StandardNormal);
    let entries: Vec<f64> = (0..m * n).map(|_| draw()).collect();
    let b: Vec<f64> = (0..m).map(|_| draw()).collect();
    LadProblem::new(DMatrix::from_row_slice(m, n, &entries), Point::from_vec(b))
}

/// Power-iteration estimate of `‖AᵀA‖₂`.
pub fn spectral_norm_sq(a: &DMatrix<f64>, max_iters: usize, tol: f64) -> f64 {
    let n = a.ncols();
    let mut v = Point::from_element(n, 1.0 / (n as f64).sqrt());
    let mut estimate = 0.0;
    for _ in 0..max_iters {
        let w = a.tr_mul(&(a * &v));
        let norm = w.norm();
        if norm == 0.0 {
            return 0.0;
        }
        let next = v.dot(&w);
        v = w / norm;
        let converged = (next - estimate).abs() <= tol * next.abs();
        estimate = next;
        if converged {
            break;
        }
    }
    estimate
}

/// The strongly convex subproblem `min_y φ_x(y)` with gap tolerance `omega`.
#[derive(Clone, Debug)]
pub struct ProxSubproblem<'a> {
    pub problem: &'a LadProblem,
    pub anchor: Point,
    pub omega: f64,
}

/// Dual iterate of the accelerated method.
#[derive(Clone, Debug, PartialEq)]
pub struct DualState {
    /// Current dual point, always inside the unit ∞-box.
    pub u: Point,
    /// Extrapolated companion point.
    pub momentum: Point,
    pub lipschitz: f64,
    pub iterations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProxResult {
    pub p: Point,
    /// `φ_x(p) − D(u)`, an upper bound on `φ_x(p) − min φ_x`.
    pub gap: f64,
    pub inner_iters: usize,
    pub dual: DualState,
}

impl ProxResult {
    pub fn stats(&self, omega: f64) -> InnerStats {
        InnerStats {
            iters: self.inner_iters,
            gap: self.gap,
            omega,
        }
    }
}

/// Dual FISTA solver bound to one problem; the Lipschitz estimate is computed
/// once at construction.
#[derive(Clone, Debug)]
pub struct ProxSolver<'a> {
    problem: &'a LadProblem,
    lipschitz: f64,
    pub max_inner: usize,
}

fn clip_unit(v: &mut Point) {
    for c in v.iter_mut() {
        *c = c.clamp(-1.0, 1.0);
    }
}

impl<'a> ProxSolver<'a> {
    pub fn new(problem: &'a LadProblem) -> Self {
        let est = spectral_norm_sq(&problem.a, POWER_ITERATIONS, POWER_TOLERANCE);
        Self {
            problem,
            lipschitz: (est * LIPSCHITZ_SAFETY).max(f64::MIN_POSITIVE),
            max_inner: DEFAULT_MAX_INNER,
        }
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Solves `min_y φ_x(y)` to duality gap `omega`, starting from `warm`
    /// (projected onto the box) or from `u = 0`.
    pub fn solve(&self, anchor: &Point, omega: f64, warm: Option<&Point>) -> Result<ProxResult> {
        let pb = self.problem;
        check_dim(pb.n(), anchor.len())?;
        if !(omega > 0.0) {
            return Err(Error::Config(format!(
                "gap tolerance must be positive, got {omega}"
            )));
        }
        let m = pb.m();
        let c = &pb.a * anchor - &pb.b;
        let mut u = match warm {
            Some(w) => {
                check_dim(m, w.len())?;
                let mut u = w.clone();
                clip_unit(&mut u);
                u
            }
            None => Point::zeros(m),
        };
        // Cached images: v = Aᵀu, w = A Aᵀu. Extrapolated points reuse them
        // by linearity, so each iteration costs two matrix-vector products.
        let mut v = pb.a.tr_mul(&u);
        let mut w = &pb.a * &v;
        let gap_at = |u: &Point, v: &Point, w: &Point| -> f64 {
            let residual: f64 = c.iter().zip(w.iter()).map(|(ci, wi)| (ci - wi).abs()).sum();
            residual - u.dot(&c) + v.norm_squared()
        };

        let mut gap = gap_at(&u, &v, &w);
        let mut y = u.clone();
        let mut wy = w.clone();
        let mut t = 1.0f64;
        let mut iters = 0;
        let step = 1.0 / self.lipschitz;
        while gap > omega {
            if iters >= self.max_inner {
                return Err(Error::InnerBudgetExhausted { iters, gap, omega });
            }
            iters += 1;
            // ∇(−D)(y) = A Aᵀ y − c
            let mut u_next = &y - (&wy - &c) * step;
            clip_unit(&mut u_next);
            let v_next = pb.a.tr_mul(&u_next);
            let w_next = &pb.a * &v_next;
            gap = gap_at(&u_next, &v_next, &w_next);

            let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            let beta = (t - 1.0) / t_next;
            y = &u_next + (&u_next - &u) * beta;
            wy = &w_next + (&w_next - &w) * beta;
            u = u_next;
            v = v_next;
            w = w_next;
            t = t_next;
        }
        Ok(ProxResult {
            p: anchor - &v,
            gap,
            inner_iters: iters,
            dual: DualState {
                u,
                momentum: y,
                lipschitz: self.lipschitz,
                iterations: iters,
            },
        })
    }
}

/// Certified inexact proximal point of `‖A· − b‖₁` at `sub.anchor`.
pub fn prox_inexact(sub: &ProxSubproblem<'_>) -> Result<ProxResult> {
    ProxSolver::new(sub.problem).solve(&sub.anchor, sub.omega, None)
}

/// `g = x − p` with `p` an inexact proximal point at gap `ω = ε²/2`, so that
/// `‖g − ∇e(x)‖ ≤ ε`.
pub fn moreau_gradient_inexact(problem: &LadProblem, x: &Point, eps: f64) -> Result<Point> {
    if !(eps > 0.0) {
        return Err(Error::AccuracyUnattainable(eps));
    }
    let res = ProxSolver::new(problem).solve(x, 0.5 * eps * eps, None)?;
    Ok(x - res.p)
}

/// Upper bound `φ_x(p)` on the envelope value, accurate to `omega`.
pub fn envelope_value(problem: &LadProblem, x: &Point, omega: f64) -> Result<f64> {
    let res = ProxSolver::new(problem).solve(x, omega, None)?;
    problem.phi(x, &res.p)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadOptions {
    /// Start each inner solve from the previous dual iterate.
    pub warm_start: bool,
    pub max_inner: usize,
}

impl Default for LadOptions {
    fn default() -> Self {
        Self {
            warm_start: true,
            max_inner: DEFAULT_MAX_INNER,
        }
    }
}

/// Oracle for `f = e` backed by the dual solver. Traces report `‖Ax − b‖₁`.
pub struct LadOracle<'a> {
    problem: &'a LadProblem,
    solver: ProxSolver<'a>,
    options: LadOptions,
    warm: Option<Point>,
}

impl<'a> LadOracle<'a> {
    pub fn new(problem: &'a LadProblem, options: LadOptions) -> Self {
        let mut solver = ProxSolver::new(problem);
        solver.max_inner = options.max_inner;
        Self {
            problem,
            solver,
            options,
            warm: None,
        }
    }
}

impl Oracle for LadOracle<'_> {
    fn dim(&self) -> usize {
        self.problem.n()
    }

    fn value(&self, x: &Point) -> Result<f64> {
        let res = self.solver.solve(x, VALUE_OMEGA, self.warm.as_ref())?;
        self.problem.phi(x, &res.p)
    }

    fn reported_value(&self, x: &Point) -> Result<f64> {
        self.problem.value(x)
    }

    fn inexact_gradient(&mut self, x: &Point, delta: f64) -> Result<GradientSample> {
        if !(delta > 0.0) {
            return Err(Error::AccuracyUnattainable(delta));
        }
        let omega = 0.5 * delta * delta;
        let warm = if self.options.warm_start {
            self.warm.as_ref()
        } else {
            None
        };
        let res = self.solver.solve(x, omega, warm)?;
        let stats = res.stats(omega);
        let g = x - &res.p;
        if self.options.warm_start {
            self.warm = Some(res.dual.u);
        }
        Ok(GradientSample {
            g,
            inner: Some(stats),
        })
    }
}

/// How IRG moves at non-null iterations on the LAD envelope. Null iterations
/// always keep `x`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LadNullStep {
    /// Constant stepsize 1, admissible because the envelope is 1-smooth.
    Hold,
    /// `x^{k+1} = p^k`.
    ProxJump,
}

impl LadNullStep {
    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "hold" => Ok(Self::Hold),
            "prox_jump" => Ok(Self::ProxJump),
            other => Err(Error::Config(format!(
                "lad_null_step must be hold or prox_jump, got {other}"
            ))),
        }
    }

    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Hold => "hold",
            Self::ProxJump => "prox_jump",
        }
    }

    pub fn rule(&self) -> StepsizeRule {
        match self {
            Self::Hold => StepsizeRule::Constant {
                step: 1.0,
                lipschitz: 1.0,
                margin: 1.0,
            },
            Self::ProxJump => StepsizeRule::ProxJump,
        }
    }
}

/// IRG on the envelope of `‖Ax − b‖₁` from `x¹ = 0`.
pub fn irg_lad_run(
    problem: &LadProblem,
    config: &RunConfig,
    options: LadOptions,
    solver: &str,
) -> Result<Trace> {
    let mut oracle = LadOracle::new(problem, options);
    run_irg(config, &mut oracle, Point::zeros(problem.n()), solver)
}
