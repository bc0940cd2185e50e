//! Per-iteration telemetry, run summaries and CSV export.

use std::io::{Read, Write};
use std::time::Duration;

use crate::oracle::InnerStats;
use crate::stepsize::StepsizeRule;
use crate::{Error, Point, Result};

/// Default dimension above which records keep norms only.
pub const DEFAULT_DIMENSION_CAP: usize = 2048;

/// Column names of the base trace CSV.
pub const CSV_HEADER: [&str; 11] = [
    "k",
    "fval",
    "t",
    "eps",
    "r",
    "delta",
    "null",
    "dnorm",
    "gnorm",
    "exact_gnorm",
    "dgnorm",
];

/// Extra columns written when records carry inner-solver telemetry.
pub const CSV_INNER_HEADER: [&str; 3] = ["inner_iters", "gap", "omega"];

/// Telemetry of one iteration `k` (1-based). `x`, `g`, `d` refer to the
/// iterate before the update; `fval` is the reported value at `x`.
#[derive(Clone, Debug, PartialEq)]
pub struct IterationRecord {
    pub k: usize,
    pub x: Option<Point>,
    pub g: Option<Point>,
    pub d: Option<Point>,
    pub t: f64,
    pub eps: Option<f64>,
    pub r: Option<f64>,
    pub delta: Option<f64>,
    pub null_flag: bool,
    pub fval: f64,
    pub gnorm: f64,
    pub dnorm: f64,
    /// ‖d + g‖, the distance from −d to the gradient approximation.
    pub dg_norm: Option<f64>,
    pub exact_grad_norm: Option<f64>,
    pub inner: Option<InnerStats>,
}

impl IterationRecord {
    /// A record with every optional field empty; solvers fill in the rest.
    pub fn bare(k: usize, fval: f64, t: f64, gnorm: f64, dnorm: f64) -> Self {
        Self {
            k,
            x: None,
            g: None,
            d: None,
            t,
            eps: None,
            r: None,
            delta: None,
            null_flag: dnorm == 0.0,
            fval,
            gnorm,
            dnorm,
            dg_norm: None,
            exact_grad_norm: None,
            inner: None,
        }
    }

    fn validate(&self) -> Result<()> {
        let k = self.k;
        let finite = |field: &'static str, v: f64| {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::NonFinite { field, k })
            }
        };
        finite("fval", self.fval)?;
        finite("t", self.t)?;
        finite("gnorm", self.gnorm)?;
        finite("dnorm", self.dnorm)?;
        for (field, v) in [
            ("eps", self.eps),
            ("r", self.r),
            ("delta", self.delta),
            ("dg_norm", self.dg_norm),
            ("exact_grad_norm", self.exact_grad_norm),
        ] {
            if let Some(v) = v {
                finite(field, v)?;
            }
        }
        if let Some(inner) = &self.inner {
            finite("gap", inner.gap)?;
            finite("omega", inner.omega)?;
        }
        for (field, v) in [("x", &self.x), ("g", &self.g), ("d", &self.d)] {
            if let Some(v) = v {
                if v.iter().any(|c| !c.is_finite()) {
                    return Err(Error::NonFinite { field, k });
                }
            }
        }

        let invalid = |reason: &str| Error::InvalidRecord {
            k,
            reason: reason.to_string(),
        };
        if self.t < 0.0 {
            return Err(invalid("negative stepsize"));
        }
        if self.eps.is_some_and(|e| e <= 0.0) || self.r.is_some_and(|r| r <= 0.0) {
            return Err(invalid("radii must be positive"));
        }
        if self.delta.is_some_and(|d| d < 0.0) {
            return Err(invalid("negative error bound"));
        }
        let d_is_zero = match &self.d {
            Some(d) => d.iter().all(|&c| c == 0.0),
            None => self.dnorm == 0.0,
        };
        if self.null_flag != d_is_zero || self.null_flag != (self.dnorm == 0.0) {
            return Err(invalid("null flag must hold exactly when d = 0"));
        }
        Ok(())
    }
}

/// Which method produced a trace, with the constants the diagnostics need.
#[derive(Clone, Debug, PartialEq)]
pub enum TraceKind {
    /// IRG and its exact specialisation RG.
    ReducedGradient {
        theta: f64,
        mu: f64,
        rule: StepsizeRule,
    },
    GradientDescent {
        beta: f64,
        gamma: f64,
    },
    ProximalPoint,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RunStatus {
    Running,
    /// Null iteration with `r + 2ε ≤ ν`.
    Certified,
    /// `‖∇f(x)‖ ≤ ν` on the exact gradient.
    GradientTest,
    TargetReached,
    BudgetExhausted,
    WallClock,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Running => "running",
            RunStatus::Certified => "certified",
            RunStatus::GradientTest => "gradient_test",
            RunStatus::TargetReached => "target_reached",
            RunStatus::BudgetExhausted => "budget_exhausted",
            RunStatus::WallClock => "wall_clock",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "running" => RunStatus::Running,
            "certified" => RunStatus::Certified,
            "gradient_test" => RunStatus::GradientTest,
            "target_reached" => RunStatus::TargetReached,
            "budget_exhausted" => RunStatus::BudgetExhausted,
            "wall_clock" => RunStatus::WallClock,
            _ => return None,
        })
    }

    pub fn converged(&self) -> bool {
        matches!(
            self,
            RunStatus::Certified | RunStatus::GradientTest | RunStatus::TargetReached
        )
    }
}

/// State after the last recorded iteration.
#[derive(Clone, Debug, PartialEq)]
pub struct Terminal {
    pub x: Option<Point>,
    pub fval: f64,
    pub eps: Option<f64>,
    pub r: Option<f64>,
    pub exact_grad_norm: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct Trace {
    pub solver: String,
    pub kind: TraceKind,
    pub records: Vec<IterationRecord>,
    pub terminal: Option<Terminal>,
    pub status: RunStatus,
    pub wall_time: Duration,
    pub dimension_cap: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    pub iterations: usize,
    pub final_fval: f64,
    pub null_count: usize,
    pub final_eps: Option<f64>,
    pub final_r: Option<f64>,
    pub wall_time: Duration,
}

impl Trace {
    pub fn new(solver: impl Into<String>, kind: TraceKind) -> Self {
        Self {
            solver: solver.into(),
            kind,
            records: Vec::new(),
            terminal: None,
            status: RunStatus::Running,
            wall_time: Duration::ZERO,
            dimension_cap: DEFAULT_DIMENSION_CAP,
        }
    }

    pub fn with_dimension_cap(mut self, cap: usize) -> Self {
        self.dimension_cap = cap;
        self
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Whether full vectors are stored for problems of dimension `n`.
    pub fn keeps_vectors(&self, n: usize) -> bool {
        n <= self.dimension_cap
    }

    /// Appends `record`, enforcing sequencing, finiteness and the null-flag
    /// invariant.
    pub fn record_iteration(&mut self, record: IterationRecord) -> Result<()> {
        let expected = self.records.len() + 1;
        if record.k != expected {
            return Err(Error::IndexGap {
                expected,
                got: record.k,
            });
        }
        record.validate()?;
        if let Some(first) = self.records.first() {
            let n = first.x.as_ref().map(|x| x.len());
            for v in [&record.x, &record.g, &record.d].into_iter().flatten() {
                if let Some(n) = n {
                    crate::check_dim(n, v.len())?;
                }
            }
        }
        self.records.push(record);
        Ok(())
    }

    /// Fails on an empty trace.
    pub fn summarize(&self) -> Result<Summary> {
        let last = self.records.last().ok_or(Error::EmptyTrace)?;
        Ok(Summary {
            iterations: self.records.len(),
            final_fval: last.fval,
            null_count: self.records.iter().filter(|r| r.null_flag).count(),
            final_eps: last.eps,
            final_r: last.r,
            wall_time: self.wall_time,
        })
    }

    /// `x` after iteration `idx` (0-based record index), if stored.
    pub fn next_x(&self, idx: usize) -> Option<&Point> {
        match self.records.get(idx + 1) {
            Some(next) => next.x.as_ref(),
            None => self.terminal.as_ref().and_then(|t| t.x.as_ref()),
        }
    }

    /// Radii `(ε, r)` after iteration `idx`, if known.
    pub fn next_radii(&self, idx: usize) -> Option<(f64, f64)> {
        match self.records.get(idx + 1) {
            Some(next) => next.eps.zip(next.r),
            None => self.terminal.as_ref().and_then(|t| t.eps.zip(t.r)),
        }
    }

    pub fn next_fval(&self, idx: usize) -> Option<f64> {
        match self.records.get(idx + 1) {
            Some(next) => Some(next.fval),
            None => self.terminal.as_ref().map(|t| t.fval),
        }
    }

    pub fn has_inner_stats(&self) -> bool {
        self.records.iter().any(|r| r.inner.is_some())
    }

    /// Writes the trace as CSV. Inner-solver columns are appended when any
    /// record carries them.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let inner = self.has_inner_stats();
        let mut w = csv::Writer::from_writer(out);
        let mut header: Vec<&str> = CSV_HEADER.to_vec();
        if inner {
            header.extend(CSV_INNER_HEADER);
        }
        w.write_record(&header)?;
        for rec in &self.records {
            let mut row = vec![
                rec.k.to_string(),
                fmt_f64(rec.fval),
                fmt_f64(rec.t),
                fmt_opt(rec.eps),
                fmt_opt(rec.r),
                fmt_opt(rec.delta),
                u8::from(rec.null_flag).to_string(),
                fmt_f64(rec.dnorm),
                fmt_f64(rec.gnorm),
                fmt_opt(rec.exact_grad_norm),
                fmt_opt(rec.dg_norm),
            ];
            if inner {
                match &rec.inner {
                    Some(s) => {
                        row.push(s.iters.to_string());
                        row.push(fmt_f64(s.gap));
                        row.push(fmt_f64(s.omega));
                    }
                    None => row.extend([String::new(), String::new(), String::new()]),
                }
            }
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`Trace::write_csv`]. Vectors are not part of
    /// the format, so the returned records carry norms only.
    pub fn read_csv<R: Read>(input: R, solver: impl Into<String>, kind: TraceKind) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers()?.clone();
        let cols: Vec<&str> = header.iter().collect();
        if cols.len() < CSV_HEADER.len() || cols[..CSV_HEADER.len()] != CSV_HEADER {
            return Err(Error::Parse(format!("unexpected trace header {cols:?}")));
        }
        let inner = cols.len() == CSV_HEADER.len() + CSV_INNER_HEADER.len()
            && cols[CSV_HEADER.len()..] == CSV_INNER_HEADER;
        if !inner && cols.len() != CSV_HEADER.len() {
            return Err(Error::Parse(format!("unexpected trace header {cols:?}")));
        }

        let mut trace = Trace::new(solver, kind);
        for (line, row) in rdr.records().enumerate() {
            let row = row?;
            let field = |i: usize| row.get(i).unwrap_or("");
            let req = |i: usize| parse_f64(field(i), line);
            let opt = |i: usize| -> Result<Option<f64>> {
                match field(i) {
                    "" => Ok(None),
                    s => parse_f64(s, line).map(Some),
                }
            };
            let k = field(0)
                .parse::<usize>()
                .map_err(|e| Error::Parse(format!("row {}: k: {e}", line + 1)))?;
            let null_flag = match field(6) {
                "1" => true,
                "0" => false,
                other => {
                    return Err(Error::Parse(format!(
                        "row {}: null flag `{other}`",
                        line + 1
                    )))
                }
            };
            let mut rec = IterationRecord::bare(k, req(1)?, req(2)?, req(8)?, req(7)?);
            rec.eps = opt(3)?;
            rec.r = opt(4)?;
            rec.delta = opt(5)?;
            rec.null_flag = null_flag;
            rec.exact_grad_norm = opt(9)?;
            rec.dg_norm = opt(10)?;
            if inner && !field(11).is_empty() {
                let iters = field(11)
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("row {}: inner_iters: {e}", line + 1)))?;
                rec.inner = Some(InnerStats {
                    iters,
                    gap: req(12)?,
                    omega: req(13)?,
                });
            }
            trace.record_iteration(rec)?;
        }
        Ok(trace)
    }
}

fn parse_f64(s: &str, line: usize) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|e| Error::Parse(format!("row {}: `{s}`: {e}", line + 1)))
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}
