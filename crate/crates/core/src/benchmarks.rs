//! Smooth test objectives, synthetic noisy-gradient oracles and a
//! finite-difference gradient checker.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::oracle::{GradientSample, Oracle};
use crate::{check_dim, Error, Point, Result};

/// A smooth function with closed-form value and gradient.
pub trait SmoothFunction {
    fn dim(&self) -> usize;
    fn value(&self, x: &Point) -> f64;
    fn gradient(&self, x: &Point) -> Point;
}

/// Dixon & Price: `(x₁ − 1)² + Σ_{i≥2} i (2x_i² − x_{i−1})²`.
pub fn dixon_price_value(x: &Point) -> f64 {
    let mut f = (x[0] - 1.0).powi(2);
    for i in 1..x.len() {
        let w = (i + 1) as f64;
        f += w * (2.0 * x[i] * x[i] - x[i - 1]).powi(2);
    }
    f
}

pub fn dixon_price_gradient(x: &Point) -> Point {
    let n = x.len();
    let mut g = Point::zeros(n);
    g[0] = 2.0 * (x[0] - 1.0);
    for i in 1..n {
        let w = (i + 1) as f64;
        let inner = 2.0 * x[i] * x[i] - x[i - 1];
        g[i] += 8.0 * w * x[i] * inner;
        g[i - 1] -= 2.0 * w * inner;
    }
    g
}

/// The minimizer with `x₁ = 1`, `x_k = √(x_{k−1}/2)`.
pub fn dixon_price_minimizer(n: usize) -> Point {
    let mut x = Point::zeros(n);
    x[0] = 1.0;
    for k in 1..n {
        x[k] = (x[k - 1] / 2.0).sqrt();
    }
    x
}

/// The second minimizer: as [`dixon_price_minimizer`] with the last
/// coordinate negated.
pub fn dixon_price_second_minimizer(n: usize) -> Point {
    let mut y = dixon_price_minimizer(n);
    y[n - 1] = -y[n - 1];
    y
}

/// Rosenbrock: `Σ_{i<n} 100(x_{i+1} − x_i²)² + (x_i − 1)²`.
pub fn rosenbrock_value(x: &Point) -> f64 {
    x.as_slice()
        .windows(2)
        .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (w[0] - 1.0).powi(2))
        .sum()
}

pub fn rosenbrock_gradient(x: &Point) -> Point {
    let n = x.len();
    let mut g = Point::zeros(n);
    for i in 0..n - 1 {
        let valley = x[i + 1] - x[i] * x[i];
        g[i] += -400.0 * x[i] * valley + 2.0 * (x[i] - 1.0);
        g[i + 1] += 200.0 * valley;
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BenchmarkFunction {
    DixonPrice(usize),
    Rosenbrock(usize),
}

impl BenchmarkFunction {
    pub fn new(name: &str, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::Config(format!(
                "benchmark dimension must be >= 2, got {n}"
            )));
        }
        match name {
            "dixon_price" | "dixon-price" | "dixon" | "d" => Ok(BenchmarkFunction::DixonPrice(n)),
            "rosenbrock" | "rosen" | "r" => Ok(BenchmarkFunction::Rosenbrock(n)),
            other => Err(Error::Config(format!("unknown benchmark `{other}`"))),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkFunction::DixonPrice(_) => "dixon_price",
            BenchmarkFunction::Rosenbrock(_) => "rosenbrock",
        }
    }

    /// Short label such as `D10` or `R50`.
    pub fn label(&self) -> String {
        match self {
            BenchmarkFunction::DixonPrice(n) => format!("D{n}"),
            BenchmarkFunction::Rosenbrock(n) => format!("R{n}"),
        }
    }

    /// `1_n` for Dixon & Price, `0_n` for Rosenbrock.
    pub fn start_point(&self) -> Point {
        match *self {
            BenchmarkFunction::DixonPrice(n) => Point::from_element(n, 1.0),
            BenchmarkFunction::Rosenbrock(n) => Point::zeros(n),
        }
    }

    pub fn minimizer(&self) -> Point {
        match *self {
            BenchmarkFunction::DixonPrice(n) => dixon_price_minimizer(n),
            BenchmarkFunction::Rosenbrock(n) => Point::from_element(n, 1.0),
        }
    }
}

impl SmoothFunction for BenchmarkFunction {
    fn dim(&self) -> usize {
        match *self {
            BenchmarkFunction::DixonPrice(n) | BenchmarkFunction::Rosenbrock(n) => n,
        }
    }

    fn value(&self, x: &Point) -> f64 {
        match self {
            BenchmarkFunction::DixonPrice(_) => dixon_price_value(x),
            BenchmarkFunction::Rosenbrock(_) => rosenbrock_value(x),
        }
    }

    fn gradient(&self, x: &Point) -> Point {
        match self {
            BenchmarkFunction::DixonPrice(_) => dixon_price_gradient(x),
            BenchmarkFunction::Rosenbrock(_) => rosenbrock_gradient(x),
        }
    }
}

/// `f(x) = ½⟨Qx, x⟩` with symmetric positive semidefinite `Q`.
#[derive(Clone, Debug, PartialEq)]
pub struct Quadratic {
    pub q: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(q: DMatrix<f64>) -> Result<Self> {
        if !q.is_square() {
            return Err(Error::Config("quadratic matrix must be square".into()));
        }
        Ok(Self { q })
    }

    pub fn identity(n: usize) -> Self {
        Self {
            q: DMatrix::identity(n, n),
        }
    }

    /// Eigenvalues evenly spaced in `[1, kappa]`, eigenvectors from the QR
    /// factor of a seeded Gaussian matrix.
    pub fn with_condition_number(n: usize, kappa: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let g = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let u = g.qr().q();
        let eig = Point::from_fn(n, |i, _| {
            if n == 1 {
                1.0
            } else {
                1.0 + (kappa - 1.0) * i as f64 / (n - 1) as f64
            }
        });
        let q = &u * DMatrix::from_diagonal(&eig) * u.transpose();
        // symmetrize away rounding
        let q = (&q + q.transpose()) * 0.5;
        Self { q }
    }

    /// Largest eigenvalue, the Lipschitz constant of the gradient.
    pub fn lipschitz(&self) -> f64 {
        self.q
            .clone()
            .symmetric_eigenvalues()
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max)
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.q.nrows()
    }
    fn value(&self, x: &Point) -> f64 {
        0.5 * x.dot(&(&self.q * x))
    }
    fn gradient(&self, x: &Point) -> Point {
        &self.q * x
    }
}

/// Exact oracle: the inexact channel returns the exact gradient.
#[derive(Clone, Debug)]
pub struct ExactOracle<F> {
    pub f: F,
}

impl<F: SmoothFunction> ExactOracle<F> {
    pub fn new(f: F) -> Self {
        Self { f }
    }
}

impl<F: SmoothFunction> Oracle for ExactOracle<F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, x: &Point) -> Result<f64> {
        check_dim(self.f.dim(), x.len())?;
        Ok(self.f.value(x))
    }
    fn inexact_gradient(&mut self, x: &Point, _delta: f64) -> Result<GradientSample> {
        self.exact_gradient(x).map(GradientSample::plain)
    }
    fn has_exact_gradient(&self) -> bool {
        true
    }
    fn exact_gradient(&self, x: &Point) -> Result<Point> {
        check_dim(self.f.dim(), x.len())?;
        Ok(self.f.gradient(x))
    }
}

/// Returns `∇f(x) + scale·δ·u` with `u` uniform on the unit sphere, drawn
/// from a per-oracle seeded stream. With the default scale 0.5 the error is
/// exactly half the requested bound.
#[derive(Clone, Debug)]
pub struct NoisyOracle<F> {
    pub f: F,
    scale: f64,
    rng: ChaCha8Rng,
}

pub const DEFAULT_NOISE_SCALE: f64 = 0.5;

impl<F: SmoothFunction> NoisyOracle<F> {
    pub fn new(f: F, seed: u64) -> Self {
        Self::with_scale(f, seed, DEFAULT_NOISE_SCALE)
    }

    /// `scale` must lie in `[0, 1]` for the error bound to hold.
    pub fn with_scale(f: F, seed: u64, scale: f64) -> Self {
        assert!(
            (0.0..=1.0).contains(&scale),
            "noise scale must lie in [0,1]"
        );
        Self {
            f,
            scale,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn noisy_gradient(&mut self, x: &Point, delta: f64) -> Result<Point> {
        check_dim(self.f.dim(), x.len())?;
        if !(delta >= 0.0) {
            return Err(Error::AccuracyUnattainable(delta));
        }
        let mut g = self.f.gradient(x);
        let radius = self.scale * delta;
        if radius > 0.0 {
            g += unit_sphere_sample(&mut self.rng, x.len()) * radius;
        }
        Ok(g)
    }
}

impl<F: SmoothFunction> Oracle for NoisyOracle<F> {
    fn dim(&self) -> usize {
        self.f.dim()
    }
    fn value(&self, x: &Point) -> Result<f64> {
        check_dim(self.f.dim(), x.len())?;
        Ok(self.f.value(x))
    }
    fn inexact_gradient(&mut self, x: &Point, delta: f64) -> Result<GradientSample> {
        self.noisy_gradient(x, delta).map(GradientSample::plain)
    }
    fn has_exact_gradient(&self) -> bool {
        true
    }
    fn exact_gradient(&self, x: &Point) -> Result<Point> {
        check_dim(self.f.dim(), x.len())?;
        Ok(self.f.gradient(x))
    }
}

/// Normalized Gaussian vector; a zero draw is resampled.
pub fn unit_sphere_sample<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Point {
    loop {
        let v = Point::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let norm = v.norm();
        if norm > 0.0 {
            return v / norm;
        }
    }
}

/// `ρ_k = 1 / ln(k + 1)` for `k ≥ 1`.
pub fn rho_schedule_log(k: usize) -> f64 {
    1.0 / ((k as f64) + 1.0).ln()
}

/// Central differences `(f(x + h eᵢ) − f(x − h eᵢ)) / 2h`.
pub fn finite_difference_gradient<F>(mut f: F, x: &Point, h: f64) -> Result<Point>
where
    F: FnMut(&Point) -> Result<f64>,
{
    if !(h > 0.0) {
        return Err(Error::Config(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    let mut grad = Point::zeros(x.len());
    let mut probe = x.clone();
    for i in 0..x.len() {
        probe[i] = x[i] + h;
        let up = f(&probe)?;
        probe[i] = x[i] - h;
        let down = f(&probe)?;
        probe[i] = x[i];
        grad[i] = (up - down) / (2.0 * h);
    }
    Ok(grad)
}
