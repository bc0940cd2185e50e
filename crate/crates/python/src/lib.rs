//! Python bindings for `irg-core`: benchmark functions, IRG/GD/RG runs, the
//! LAD prox oracle and IPPM, and trace diagnostics.

use irg_core::baselines::{gd_backtracking_run, ippm_run, rg_run, IppmConfig};
use irg_core::benchmarks::{BenchmarkFunction, ExactOracle, NoisyOracle, SmoothFunction};
use irg_core::diagnostics::{self, DiagnosticOptions, NonNullSubsequence, Verdict};
use irg_core::direction::run_irg;
use irg_core::lad::{self, LadNullStep, LadOptions, ProxSolver};
use irg_core::{Oracle, Point, RunConfig};
use nalgebra::DMatrix;
use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: irg_core::Error) -> PyErr {
    match e {
        irg_core::Error::Config(_) | irg_core::Error::DimensionMismatch { .. } => {
            PyValueError::new_err(e.to_string())
        }
        other => PyRuntimeError::new_err(other.to_string()),
    }
}

fn point(v: Vec<f64>) -> Point {
    Point::from_vec(v)
}

/// A smooth test function: `dixon_price` or `rosenbrock`.
#[pyclass(name = "Benchmark", frozen)]
pub struct PyBenchmark {
    inner: BenchmarkFunction,
}

#[pymethods]
impl PyBenchmark {
    #[new]
    fn new(name: &str, n: usize) -> PyResult<Self> {
        BenchmarkFunction::new(name, n)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn label(&self) -> String {
        self.inner.label()
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        check_len(self.inner.dim(), x.len())?;
        Ok(self.inner.value(&point(x)))
    }

    fn gradient(&self, x: Vec<f64>) -> PyResult<Vec<f64>> {
        check_len(self.inner.dim(), x.len())?;
        Ok(self.inner.gradient(&point(x)).as_slice().to_vec())
    }

    fn start_point(&self) -> Vec<f64> {
        self.inner.start_point().as_slice().to_vec()
    }

    fn minimizer(&self) -> Vec<f64> {
        self.inner.minimizer().as_slice().to_vec()
    }

    /// Runs `GD`, `RGB` or `IRGB` from the standard start point with the
    /// benchmark defaults and the exact-gradient stopping test.
    #[pyo3(signature = (solver, nu = 0.01, seed = 0, max_iterations = 10_000))]
    fn run(&self, solver: &str, nu: f64, seed: u64, max_iterations: usize) -> PyResult<PyTrace> {
        let mut cfg = RunConfig::benchmark_defaults(nu);
        cfg.stopping.max_iterations = max_iterations;
        cfg.seed = seed;
        let exact = ExactOracle::new(self.inner);
        let x1 = self.inner.start_point();
        let trace = match solver {
            "GD" => gd_backtracking_run(&exact, x1, 0.7, 0.5, nu, max_iterations),
            "RGB" => rg_run(&cfg, &exact, x1),
            "IRGB" => run_irg(&cfg, &mut NoisyOracle::new(self.inner, seed), x1, "IRGB"),
            other => return Err(PyValueError::new_err(format!("unknown solver {other}"))),
        }
        .map_err(to_py)?;
        Ok(PyTrace {
            inner: trace,
            benchmark: Some(self.inner),
            nu: Some(nu),
        })
    }
}

fn check_len(expected: usize, got: usize) -> PyResult<()> {
    if expected == got {
        Ok(())
    } else {
        Err(PyValueError::new_err(format!(
            "dimension mismatch: expected {expected}, got {got}"
        )))
    }
}

/// Least absolute deviations problem `min ‖Ax − b‖₁`.
#[pyclass(name = "LadProblem", frozen)]
pub struct PyLadProblem {
    inner: lad::LadProblem,
}

#[pymethods]
impl PyLadProblem {
    #[new]
    fn new(a: Vec<Vec<f64>>, b: Vec<f64>) -> PyResult<Self> {
        let m = a.len();
        let n = a.first().map_or(0, Vec::len);
        if a.iter().any(|row| row.len() != n) {
            return Err(PyValueError::new_err("rows of A differ in length"));
        }
        let flat: Vec<f64> = a.into_iter().flatten().collect();
        let a = DMatrix::from_row_slice(m, n, &flat);
        lad::LadProblem::new(a, point(b))
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    /// Gaussian instance with a consistent right-hand side.
    #[staticmethod]
    fn gaussian(m: usize, n: usize, seed: u64) -> PyResult<Self> {
        lad::generate_gaussian_instance(m, n, seed)
            .map(|inner| Self { inner })
            .map_err(to_py)
    }

    #[getter]
    fn shape(&self) -> (usize, usize) {
        (self.inner.m(), self.inner.n())
    }

    fn value(&self, x: Vec<f64>) -> PyResult<f64> {
        self.inner.value(&point(x)).map_err(to_py)
    }

    /// Inexact proximal point at `x` with duality gap at most `omega`.
    /// Returns `(p, gap, inner_iterations)`.
    fn prox(&self, x: Vec<f64>, omega: f64) -> PyResult<(Vec<f64>, f64, usize)> {
        let res = ProxSolver::new(&self.inner)
            .solve(&point(x), omega, None)
            .map_err(to_py)?;
        Ok((res.p.as_slice().to_vec(), res.gap, res.inner_iters))
    }

    /// IRG on the Moreau envelope from `x = 0` with the LAD defaults.
    #[pyo3(signature = (r1, nu = 1e-6, max_iterations = 10_000, null_step = "prox_jump", target = None))]
    fn run_irg(
        &self,
        r1: f64,
        nu: f64,
        max_iterations: usize,
        null_step: &str,
        target: Option<f64>,
    ) -> PyResult<PyTrace> {
        let mut cfg = RunConfig::lad_defaults(r1);
        cfg.rule = LadNullStep::parse(null_step).map_err(to_py)?.rule();
        cfg.stopping.nu = nu;
        cfg.stopping.max_iterations = max_iterations;
        cfg.stopping.target_value = target;
        let label = format!("IRG-{r1}");
        let trace =
            lad::irg_lad_run(&self.inner, &cfg, LadOptions::default(), &label).map_err(to_py)?;
        Ok(PyTrace {
            inner: trace,
            benchmark: None,
            nu: Some(nu),
        })
    }

    /// Inexact proximal point method with `ω_k = 1/k^power` from `x = 0`.
    #[pyo3(signature = (power, max_iterations, target = None))]
    fn run_ippm(
        &self,
        power: f64,
        max_iterations: usize,
        target: Option<f64>,
    ) -> PyResult<PyTrace> {
        let mut cfg = IppmConfig::new(power, max_iterations);
        cfg.target_fval = target;
        let label = format!("IPPM-{power}");
        let x1 = Point::zeros(self.inner.n());
        let trace = ippm_run(&self.inner, x1, &cfg, &label).map_err(to_py)?;
        Ok(PyTrace {
            inner: trace,
            benchmark: None,
            nu: None,
        })
    }
}

type CheckRow = (String, String, f64, Option<usize>);

#[pyclass(name = "Trace", frozen)]
pub struct PyTrace {
    inner: irg_core::Trace,
    benchmark: Option<BenchmarkFunction>,
    nu: Option<f64>,
}

#[pymethods]
impl PyTrace {
    #[getter]
    fn solver(&self) -> String {
        self.inner.solver.clone()
    }

    #[getter]
    fn status(&self) -> &'static str {
        self.inner.status.as_str()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    #[getter]
    fn fvals(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.fval).collect()
    }

    #[getter]
    fn gnorms(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.gnorm).collect()
    }

    #[getter]
    fn dnorms(&self) -> Vec<f64> {
        self.inner.records.iter().map(|r| r.dnorm).collect()
    }

    #[getter]
    fn eps(&self) -> Vec<Option<f64>> {
        self.inner.records.iter().map(|r| r.eps).collect()
    }

    #[getter]
    fn null_flags(&self) -> Vec<bool> {
        self.inner.records.iter().map(|r| r.null_flag).collect()
    }

    #[getter]
    fn final_fval(&self) -> Option<f64> {
        self.inner.terminal.as_ref().map(|t| t.fval)
    }

    #[getter]
    fn final_x(&self) -> Option<Vec<f64>> {
        let x = self.inner.terminal.as_ref()?.x.as_ref()?;
        Some(x.as_slice().to_vec())
    }

    fn to_csv(&self) -> PyResult<String> {
        let mut buf = Vec::new();
        self.inner.write_csv(&mut buf).map_err(to_py)?;
        String::from_utf8(buf).map_err(|e| PyRuntimeError::new_err(e.to_string()))
    }

    /// Runs every diagnostic; returns `(check, verdict, worst, first_k)`
    /// tuples with verdict `pass`, `fail` or `skipped`.
    fn diagnose(&self) -> PyResult<Vec<CheckRow>> {
        let oracle = self.benchmark.map(ExactOracle::new);
        let options = DiagnosticOptions {
            nu: self.nu,
            ..Default::default()
        };
        let report = diagnostics::run_diagnostics(
            &self.inner,
            oracle.as_ref().map(|o| o as &dyn Oracle),
            &options,
        )
        .map_err(to_py)?;
        Ok(report
            .checks
            .into_iter()
            .map(|c| {
                let verdict = match c.verdict {
                    Verdict::Pass => "pass",
                    Verdict::Fail => "fail",
                    Verdict::Skipped(_) => "skipped",
                };
                (c.name.to_string(), verdict.to_string(), c.worst, c.first_k)
            })
            .collect())
    }

    /// Linear rate of the non-null iterates towards `xbar`:
    /// `(rate, residual, points_fitted)`.
    fn linear_rate(&self, xbar: Vec<f64>) -> PyResult<(f64, f64, usize)> {
        let seq = diagnostics::extract_nonnull(&self.inner).map_err(to_py)?;
        rate_of(&seq, xbar)
    }
}

fn rate_of(seq: &NonNullSubsequence, xbar: Vec<f64>) -> PyResult<(f64, f64, usize)> {
    let est = diagnostics::estimate_linear_rate(seq, &point(xbar)).map_err(to_py)?;
    Ok((est.rate, est.residual, est.points))
}

/// Linear-rate fit for an arbitrary sequence of points.
#[pyfunction]
fn estimate_linear_rate(points: Vec<Vec<f64>>, xbar: Vec<f64>) -> PyResult<(f64, f64, usize)> {
    let seq = NonNullSubsequence {
        indices: (1..=points.len()).collect(),
        points: points.into_iter().map(point).collect(),
    };
    rate_of(&seq, xbar)
}

#[pymodule]
pub mod irg {
    #[pymodule_export]
    use super::{estimate_linear_rate, PyBenchmark, PyLadProblem, PyTrace};
}
