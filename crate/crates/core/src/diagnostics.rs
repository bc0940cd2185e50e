//! Post-hoc checks of traces against the structural identities and descent
//! properties of reduced gradient methods, plus linear-rate estimation along
//! the non-null subsequence.

use std::fmt;
use std::io::Write;

use crate::oracle::Oracle;
use crate::stepsize::{armijo_accepts, trial_point, StepsizeRule};
use crate::trace::{fmt_f64, RunStatus, Trace, TraceKind};
use crate::{Error, Point, Result};

/// Relative tolerance of the projection identity `‖d + g‖ = ε`.
pub const PROJECTION_RTOL: f64 = 1e-12;
/// Relative tolerance of the descent inequalities.
pub const DESCENT_RTOL: f64 = 1e-9;
/// Largest share of `S_K` the last quartile may contribute.
pub const SUMMABILITY_SHARE: f64 = 0.01;
/// Distances below this are excluded before taking logarithms.
pub const MEASUREMENT_FLOOR: f64 = 1e-12;
pub const MIN_TAIL_POINTS: usize = 10;

const STRUCTURAL_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub enum Verdict {
    Pass,
    Fail,
    Skipped(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub verdict: Verdict,
    /// Largest violation seen; 0 when none.
    pub worst: f64,
    pub first_k: Option<usize>,
}

impl CheckResult {
    fn skipped(name: &'static str, why: impl Into<String>) -> Self {
        Self {
            name,
            verdict: Verdict::Skipped(why.into()),
            worst: 0.0,
            first_k: None,
        }
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    pub fn failed(&self) -> bool {
        self.verdict == Verdict::Fail
    }
}

/// Accumulates violations for one check.
struct Tally {
    name: &'static str,
    worst: f64,
    first_k: Option<usize>,
}

impl Tally {
    fn new(name: &'static str) -> Self {
        Self {
            name,
            worst: 0.0,
            first_k: None,
        }
    }

    /// Records `excess` at iteration `k` when positive.
    fn observe(&mut self, k: usize, excess: f64) {
        if excess > 0.0 || excess.is_nan() {
            let excess = if excess.is_nan() {
                f64::INFINITY
            } else {
                excess
            };
            self.worst = self.worst.max(excess);
            self.first_k.get_or_insert(k);
        }
    }

    fn finish(self) -> CheckResult {
        CheckResult {
            name: self.name,
            verdict: if self.first_k.is_some() {
                Verdict::Fail
            } else {
                Verdict::Pass
            },
            worst: self.worst,
            first_k: self.first_k,
        }
    }
}

fn rg_params(trace: &Trace) -> Option<(f64, f64, StepsizeRule)> {
    match trace.kind {
        TraceKind::ReducedGradient { theta, mu, rule } => Some((theta, mu, rule)),
        _ => None,
    }
}

/// Checks that `x` stays, `d = 0`, `r` and `ε` shrink by `μ` and `θ`, and
/// `‖g‖ ≤ r + ε` hold together or fail together at every iteration.
///
/// The violation magnitude is the number of conditions in the minority.
pub fn check_null_equivalences(trace: &Trace) -> CheckResult {
    const NAME: &str = "null_equivalences";
    let Some((theta, mu, _)) = rg_params(trace) else {
        return CheckResult::skipped(NAME, "not a reduced gradient trace");
    };
    let mut tally = Tally::new(NAME);
    for (i, rec) in trace.records.iter().enumerate() {
        let (Some(eps), Some(r)) = (rec.eps, rec.r) else {
            tally.observe(rec.k, 5.0);
            continue;
        };
        let mut conds = Vec::with_capacity(5);
        conds.push(match (&rec.x, trace.next_x(i)) {
            (Some(x), Some(next)) => x == next,
            _ => rec.t * rec.dnorm == 0.0,
        });
        conds.push(match &rec.d {
            Some(d) => d.iter().all(|&c| c == 0.0),
            None => rec.dnorm == 0.0,
        });
        if let Some((eps_next, r_next)) = trace.next_radii(i) {
            conds.push(r_next == mu * r);
            conds.push(eps_next == theta * eps);
        }
        conds.push(rec.gnorm <= r + eps);
        let yes = conds.iter().filter(|&&c| c).count();
        let minority = yes.min(conds.len() - yes);
        tally.observe(rec.k, minority as f64);
    }
    tally.finish()
}

/// `‖d‖ ≤ ‖g‖ ≤ ‖d‖ + ε + r` at every iteration.
pub fn check_sandwich(trace: &Trace) -> CheckResult {
    const NAME: &str = "sandwich";
    if rg_params(trace).is_none() {
        return CheckResult::skipped(NAME, "not a reduced gradient trace");
    }
    let mut tally = Tally::new(NAME);
    for rec in &trace.records {
        let (Some(eps), Some(r)) = (rec.eps, rec.r) else {
            tally.observe(rec.k, f64::INFINITY);
            continue;
        };
        let tol = STRUCTURAL_RTOL * (1.0 + rec.gnorm);
        tally.observe(rec.k, rec.dnorm - rec.gnorm - tol);
        tally.observe(rec.k, rec.gnorm - (rec.dnorm + eps + r) - tol);
    }
    tally.finish()
}

/// `‖d + g‖ = ε` at non-null iterations, relative tolerance
/// [`PROJECTION_RTOL`].
pub fn check_projection(trace: &Trace) -> CheckResult {
    const NAME: &str = "projection";
    if rg_params(trace).is_none() {
        return CheckResult::skipped(NAME, "not a reduced gradient trace");
    }
    let mut tally = Tally::new(NAME);
    for rec in trace.records.iter().filter(|r| !r.null_flag) {
        let dg = match (rec.dg_norm, &rec.d, &rec.g) {
            (Some(v), _, _) => v,
            (None, Some(d), Some(g)) => (d + g).norm(),
            _ => {
                return CheckResult::skipped(NAME, "neither ‖d + g‖ nor vectors recorded");
            }
        };
        let Some(eps) = rec.eps else {
            tally.observe(rec.k, f64::INFINITY);
            continue;
        };
        tally.observe(rec.k, (dg - eps).abs() - PROJECTION_RTOL * eps);
    }
    tally.finish()
}

/// `⟨∇f(x^k), d^k⟩ ≤ −‖d^k‖²`, re-evaluated with exact gradients.
pub fn check_sufficient_descent(trace: &Trace, oracle: &dyn Oracle) -> CheckResult {
    const NAME: &str = "sufficient_descent";
    if matches!(trace.kind, TraceKind::ProximalPoint) {
        return CheckResult::skipped(NAME, "not a gradient-type trace");
    }
    if !oracle.has_exact_gradient() {
        return CheckResult::skipped(NAME, "oracle has no exact gradient");
    }
    let mut tally = Tally::new(NAME);
    for rec in trace.records.iter().filter(|r| !r.null_flag) {
        let (Some(x), Some(d)) = (&rec.x, &rec.d) else {
            return CheckResult::skipped(NAME, "vectors not recorded");
        };
        let grad = match oracle.exact_gradient(x) {
            Ok(g) => g,
            Err(_) => {
                tally.observe(rec.k, f64::INFINITY);
                continue;
            }
        };
        let inner = grad.dot(d);
        let dsq = d.norm_squared();
        let tol = DESCENT_RTOL * (1.0 + grad.norm() * d.norm());
        tally.observe(rec.k, inner + dsq - tol);
    }
    tally.finish()
}

fn backtracking_params(trace: &Trace) -> Option<(f64, f64, u32)> {
    match trace.kind {
        TraceKind::ReducedGradient {
            rule:
                StepsizeRule::Backtracking {
                    beta,
                    gamma,
                    max_halvings,
                    ..
                },
            ..
        } => Some((beta, gamma, max_halvings)),
        TraceKind::GradientDescent { beta, gamma } => {
            Some((beta, gamma, crate::stepsize::DEFAULT_MAX_HALVINGS))
        }
        _ => None,
    }
}

/// Recorded decrease `f(x^k) − f(x^{k+1}) ≥ β t_k ‖d^k‖²` on backtracking
/// traces, with tolerance `1e-9·(1 + |f(x^k)|)`.
pub fn check_descent_chain(trace: &Trace) -> CheckResult {
    const NAME: &str = "descent_chain";
    let Some((beta, _, _)) = backtracking_params(trace) else {
        return CheckResult::skipped(NAME, "not a backtracking trace");
    };
    let mut tally = Tally::new(NAME);
    for (i, rec) in trace.records.iter().enumerate() {
        let Some(next) = trace.next_fval(i) else {
            continue;
        };
        let tol = DESCENT_RTOL * (1.0 + rec.fval.abs());
        let want = beta * rec.t * rec.dnorm * rec.dnorm;
        tally.observe(rec.k, want - (rec.fval - next) - tol);
    }
    tally.finish()
}

/// Re-runs the sufficient-decrease test for the accepted stepsize and for
/// every larger stepsize of the chain `1, γ, γ², …`: the former must pass
/// and the latter must fail, with no tolerance.
pub fn check_backtracking_contract(trace: &Trace, oracle: &dyn Oracle) -> CheckResult {
    const NAME: &str = "backtracking_contract";
    let Some((beta, gamma, max_halvings)) = backtracking_params(trace) else {
        return CheckResult::skipped(NAME, "not a backtracking trace");
    };
    let mut tally = Tally::new(NAME);
    for rec in trace.records.iter().filter(|r| !r.null_flag) {
        let (Some(x), Some(d)) = (&rec.x, &rec.d) else {
            return CheckResult::skipped(NAME, "vectors not recorded");
        };
        let dsq = d.norm_squared();
        let eval = |t: f64| oracle.value(&trial_point(x, d, t));
        let Ok(fx) = oracle.value(x) else {
            tally.observe(rec.k, f64::INFINITY);
            continue;
        };
        let mut t = 1.0;
        let mut found = false;
        for halvings in 0..=max_halvings {
            let Ok(ft) = eval(t) else {
                tally.observe(rec.k, f64::INFINITY);
                break;
            };
            let margin = ft - (fx - beta * t * dsq);
            if t == rec.t {
                found = true;
                if !armijo_accepts(ft, fx, beta, t, dsq) {
                    tally.observe(rec.k, margin.max(f64::MIN_POSITIVE));
                }
                break;
            }
            if armijo_accepts(ft, fx, beta, t, dsq) {
                tally.observe(rec.k, (-margin).max(f64::MIN_POSITIVE));
            }
            if halvings < max_halvings {
                t *= gamma;
            }
        }
        if !found {
            tally.observe(rec.k, f64::INFINITY);
        }
    }
    tally.finish()
}

/// Partial sums `S_K = Σ_{k≤K} t_k ‖d^k‖²`.
pub fn partial_sums(trace: &Trace) -> Vec<f64> {
    trace
        .records
        .iter()
        .scan(0.0, |s, rec| {
            *s += rec.t * rec.dnorm * rec.dnorm;
            Some(*s)
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summability {
    pub partial_sums: Vec<f64>,
    /// Share of `S_K` added by the last quarter of the iterations.
    pub tail_share: f64,
    pub min_dnorm: Option<f64>,
    pub result: CheckResult,
}

/// Boundedness proxy for `Σ t_k ‖d^k‖²`: the last quartile of iterations may
/// add at most [`SUMMABILITY_SHARE`] of the total. Runs cut short by a target
/// value or a budget are not convergent runs and are skipped.
pub fn check_summability(trace: &Trace) -> Summability {
    const NAME: &str = "summability";
    let sums = partial_sums(trace);
    let min_dnorm = trace.records.iter().map(|r| r.dnorm).reduce(f64::min);
    if matches!(
        trace.status,
        RunStatus::TargetReached | RunStatus::BudgetExhausted | RunStatus::WallClock
    ) {
        let why = format!("run stopped by {}", trace.status.as_str());
        return Summability {
            partial_sums: sums,
            tail_share: 0.0,
            min_dnorm,
            result: CheckResult::skipped(NAME, why),
        };
    }
    let total = sums.last().copied().unwrap_or(0.0);
    let quarter = sums.len() / 4;
    let mut tally = Tally::new(NAME);
    let mut share = 0.0;
    if quarter > 0 && total > 0.0 {
        let before = sums[sums.len() - quarter - 1];
        share = (total - before) / total;
        tally.observe(
            trace.records[sums.len() - quarter].k,
            share - SUMMABILITY_SHARE,
        );
    }
    Summability {
        partial_sums: sums,
        tail_share: share,
        min_dnorm,
        result: tally.finish(),
    }
}

/// `‖∇f(x^k)‖ ≤ 3‖d^k‖` at non-null iterations from the first index with
/// `ε_N ≤ r_N` on, which requires `θ < μ`.
pub fn check_three_dk(trace: &Trace) -> CheckResult {
    const NAME: &str = "three_dk";
    let Some((theta, mu, _)) = rg_params(trace) else {
        return CheckResult::skipped(NAME, "not a reduced gradient trace");
    };
    if theta >= mu {
        return CheckResult::skipped(NAME, "hypothesis unmet: theta >= mu");
    }
    if trace.records.iter().any(|r| r.exact_grad_norm.is_none()) {
        return CheckResult::skipped(NAME, "exact gradient norms not recorded");
    }
    let mut tally = Tally::new(NAME);
    let start = trace
        .records
        .iter()
        .position(|r| matches!((r.eps, r.r), (Some(e), Some(r)) if e <= r));
    if let Some(start) = start {
        for rec in trace.records[start..].iter().filter(|r| !r.null_flag) {
            let g = rec.exact_grad_norm.unwrap_or(f64::NAN);
            let bound = 3.0 * rec.dnorm;
            tally.observe(rec.k, g - bound - STRUCTURAL_RTOL * (1.0 + bound));
        }
    }
    tally.finish()
}

/// Over the non-null iterations of the last 10% of the trace, the smallest
/// exact gradient norm may not exceed the smallest `‖d^k‖ + 2ε_k`.
pub fn check_gradient_associated(trace: &Trace) -> CheckResult {
    const NAME: &str = "gradient_associated";
    if matches!(trace.kind, TraceKind::ProximalPoint) {
        return CheckResult::skipped(NAME, "not a gradient-type trace");
    }
    if trace.records.iter().any(|r| r.exact_grad_norm.is_none()) {
        return CheckResult::skipped(NAME, "exact gradient norms not recorded");
    }
    let mut tally = Tally::new(NAME);
    let n = trace.records.len();
    let window = &trace.records[n - n.div_ceil(10)..];
    let tail = window.iter().filter(|r| !r.null_flag);
    let mut min_grad = f64::INFINITY;
    let mut min_bound = f64::INFINITY;
    let mut first = None;
    for rec in tail {
        first.get_or_insert(rec.k);
        min_grad = min_grad.min(rec.exact_grad_norm.unwrap_or(f64::NAN));
        min_bound = min_bound.min(rec.dnorm + 2.0 * rec.eps.unwrap_or(0.0));
    }
    if let Some(k) = first {
        tally.observe(
            k,
            min_grad - min_bound - STRUCTURAL_RTOL * (1.0 + min_bound),
        );
    }
    tally.finish()
}

/// A certified stop implies `‖∇f(x)‖ ≤ ν` at the stopping point.
pub fn check_certified_soundness(trace: &Trace, nu: Option<f64>) -> CheckResult {
    const NAME: &str = "certified_soundness";
    if trace.status != RunStatus::Certified {
        return CheckResult::skipped(NAME, "run did not stop by certificate");
    }
    let Some(nu) = nu else {
        return CheckResult::skipped(NAME, "tolerance not supplied");
    };
    let Some(last) = trace.records.last() else {
        return CheckResult::skipped(NAME, "empty trace");
    };
    let Some(g) = last.exact_grad_norm else {
        return CheckResult::skipped(NAME, "exact gradient norms not recorded");
    };
    let mut tally = Tally::new(NAME);
    tally.observe(last.k, g - nu);
    tally.finish()
}

/// Iterates `z^i = x^{j_i}` at the non-null iterations `j_1 < j_2 < …`.
#[derive(Clone, Debug, PartialEq)]
pub struct NonNullSubsequence {
    pub indices: Vec<usize>,
    pub points: Vec<Point>,
}

impl NonNullSubsequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn extract_nonnull(trace: &Trace) -> Result<NonNullSubsequence> {
    let mut indices = Vec::new();
    let mut points = Vec::new();
    for rec in trace.records.iter().filter(|r| !r.null_flag) {
        let x = rec
            .x
            .as_ref()
            .ok_or_else(|| Error::InsufficientData("iterates not recorded".into()))?;
        indices.push(rec.k);
        points.push(x.clone());
    }
    if indices.is_empty() {
        return Err(Error::NoNonNullIterations);
    }
    Ok(NonNullSubsequence { indices, points })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RateEstimate {
    /// Estimated contraction factor per non-null step.
    pub rate: f64,
    /// RMS residual of the log-linear fit.
    pub residual: f64,
    /// Number of points used in the fit.
    pub points: usize,
}

/// Fits `log‖z^i − x̄‖ ≈ a + i·log(rate)` by least squares.
///
/// Points within [`MEASUREMENT_FLOOR`] of `x̄` are dropped, then the fit uses
/// the last half of the remaining points, which must number at least
/// [`MIN_TAIL_POINTS`].
pub fn estimate_linear_rate(seq: &NonNullSubsequence, xbar: &Point) -> Result<RateEstimate> {
    let mut usable = Vec::new();
    for (i, z) in seq.points.iter().enumerate() {
        crate::check_dim(xbar.len(), z.len())?;
        let dist = (z - xbar).norm();
        if dist > MEASUREMENT_FLOOR {
            usable.push(((i + 1) as f64, dist.ln()));
        }
    }
    if usable.is_empty() {
        return Err(Error::MeasurementFloor);
    }
    let tail = &usable[usable.len() / 2..];
    if tail.len() < MIN_TAIL_POINTS {
        return Err(Error::InsufficientData(format!(
            "{} tail points above the floor, need {MIN_TAIL_POINTS}",
            tail.len()
        )));
    }
    let n = tail.len() as f64;
    let mean_x = tail.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = tail.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = tail.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = tail.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let sse: f64 = tail
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum();
    Ok(RateEstimate {
        rate: slope.exp(),
        residual: (sse / n).sqrt(),
        points: tail.len(),
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticOptions {
    /// Run the checks that need exact gradients or values from an oracle.
    pub oracle_checks: bool,
    /// Tolerance `ν` for the certified-stop soundness check.
    pub nu: Option<f64>,
    /// Reference point for rate estimation.
    pub rate_reference: Option<Point>,
}

impl Default for DiagnosticOptions {
    fn default() -> Self {
        Self {
            oracle_checks: true,
            nu: None,
            rate_reference: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RateBlock {
    Estimated {
        estimate: RateEstimate,
        subsequence_len: usize,
    },
    Unavailable(String),
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiagnosticReport {
    pub solver: String,
    pub checks: Vec<CheckResult>,
    pub rate: Option<RateBlock>,
}

impl DiagnosticReport {
    pub fn all_passed(&self) -> bool {
        !self.checks.iter().any(CheckResult::failed)
    }

    pub fn get(&self, name: &str) -> Option<&CheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }

    /// Writes `check,pass,worst,first_k`; `pass` is `true`, `false` or
    /// `skipped`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["check", "pass", "worst", "first_k"])?;
        for c in &self.checks {
            let pass = match c.verdict {
                Verdict::Pass => "true",
                Verdict::Fail => "false",
                Verdict::Skipped(_) => "skipped",
            };
            let first = c.first_k.map(|k| k.to_string()).unwrap_or_default();
            w.write_record([c.name, pass, &fmt_f64(c.worst), &first])?;
        }
        w.flush()?;
        Ok(())
    }
}

impl fmt::Display for DiagnosticReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let first = c
                .first_k
                .map(|k| k.to_string())
                .unwrap_or_else(|| "-".into());
            match &c.verdict {
                Verdict::Pass => writeln!(f, "{} {} PASS", self.solver, c.name)?,
                Verdict::Fail => writeln!(
                    f,
                    "{} {} FAIL worst={} first_k={first}",
                    self.solver,
                    c.name,
                    fmt_f64(c.worst)
                )?,
                Verdict::Skipped(why) => writeln!(f, "{} {} SKIP ({why})", self.solver, c.name)?,
            }
        }
        match &self.rate {
            Some(RateBlock::Estimated {
                estimate,
                subsequence_len,
            }) => writeln!(
                f,
                "{} rate={} residual={} subsequence={subsequence_len} fitted={}",
                self.solver,
                fmt_f64(estimate.rate),
                fmt_f64(estimate.residual),
                estimate.points
            )?,
            Some(RateBlock::Unavailable(why)) => {
                writeln!(f, "{} rate unavailable: {why}", self.solver)?
            }
            None => {}
        }
        Ok(())
    }
}

/// Runs every check on `trace`. Check failures are report entries, never
/// errors.
pub fn run_diagnostics(
    trace: &Trace,
    oracle: Option<&dyn Oracle>,
    options: &DiagnosticOptions,
) -> Result<DiagnosticReport> {
    if options.nu.is_some_and(|nu| !(nu > 0.0)) {
        return Err(Error::Config("nu must be positive".into()));
    }
    let with_oracle = |name: &'static str, f: &dyn Fn(&dyn Oracle) -> CheckResult| match oracle {
        _ if !options.oracle_checks => CheckResult::skipped(name, "oracle checks disabled"),
        Some(o) => f(o),
        None => CheckResult::skipped(name, "no oracle supplied"),
    };
    let checks = vec![
        check_null_equivalences(trace),
        check_sandwich(trace),
        check_projection(trace),
        with_oracle("sufficient_descent", &|o| {
            check_sufficient_descent(trace, o)
        }),
        check_descent_chain(trace),
        with_oracle("backtracking_contract", &|o| {
            check_backtracking_contract(trace, o)
        }),
        check_summability(trace).result,
        check_three_dk(trace),
        check_gradient_associated(trace),
        check_certified_soundness(trace, options.nu),
    ];
    let rate = options.rate_reference.as_ref().map(|xbar| {
        match extract_nonnull(trace)
            .and_then(|seq| estimate_linear_rate(&seq, xbar).map(|estimate| (estimate, seq.len())))
        {
            Ok((estimate, subsequence_len)) => RateBlock::Estimated {
                estimate,
                subsequence_len,
            },
            Err(e) => RateBlock::Unavailable(e.to_string()),
        }
    });
    Ok(DiagnosticReport {
        solver: trace.solver.clone(),
        checks,
        rate,
    })
}
