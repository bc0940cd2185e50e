use thiserror::Error;

/// Errors surfaced by solvers, oracles and trace plumbing.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value in field `{field}` of record k={k}")]
    NonFinite { field: &'static str, k: usize },

    #[error("index gap: expected record k={expected}, got k={got}")]
    IndexGap { expected: usize, got: usize },

    #[error("invalid record k={k}: {reason}")]
    InvalidRecord { k: usize, reason: String },

    #[error("empty trace")]
    EmptyTrace,

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("reduced direction needs ‖g‖ > ε (‖g‖ = {gnorm}, ε = {eps})")]
    DirectionPrecondition { gnorm: f64, eps: f64 },

    #[error(
        "backtracking found no acceptable stepsize after {halvings} halvings (last t = {last_t})"
    )]
    LinesearchExhausted { halvings: u32, last_t: f64 },

    #[error("inner solver stopped after {iters} iterations with gap {gap} > omega {omega}")]
    InnerBudgetExhausted { iters: usize, gap: f64, omega: f64 },

    #[error("oracle cannot deliver a gradient with error bound {0}")]
    AccuracyUnattainable(f64),

    #[error("oracle does not expose exact gradients")]
    ExactGradientUnavailable,

    #[error("no non-null iterations")]
    NoNonNullIterations,

    #[error("converged beyond measurement floor")]
    MeasurementFloor,

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    #[error("i/o error: {0}")]
    Io(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
