use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("solver error: {0}")]
    Solver(#[from] irg_core::Error),
    #[error("{failed} solver row(s) failed")]
    SolverRows { failed: usize },
    #[error("{failed} diagnostic check(s) failed")]
    CheckFailed { failed: usize },
}

impl CliError {
    /// 0 success, 1 check failure, 2 configuration error, 3 solver error.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::CheckFailed { .. } => 1,
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Solver(_) | CliError::SolverRows { .. } => 3,
        }
    }
}

impl From<csv::Error> for CliError {
    fn from(e: csv::Error) -> Self {
        CliError::Io(std::io::Error::other(e))
    }
}

impl From<toml::de::Error> for CliError {
    fn from(e: toml::de::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;
