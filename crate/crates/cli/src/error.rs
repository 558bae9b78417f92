use bergm::error::{EstimateError, FormulaError, LoadError, ModelError, OracleError};
use thiserror::Error;

/// Process exit codes, one per failure class.
pub mod exit {
    pub const OK: i32 = 0;
    /// Malformed formula, flag value, input file contents or model
    /// specification (also clap's usage-error code).
    pub const PARSE: i32 = 2;
    pub const IO: i32 = 3;
    pub const ESTIMATION: i32 = 4;
    /// Degeneracy warnings, when `--fail-on-degeneracy` is given.
    pub const DEGENERATE: i32 = 5;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("model formula: {}\n  {formula}\n  {caret:>width$}", err.message, caret = "^", width = err.pos)]
    Formula { formula: String, err: FormulaError },
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Load(#[from] LoadError),
    #[error("{path}: {source}")]
    Write { path: String, source: std::io::Error },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("estimation failed: {0}")]
    Estimate(EstimateError),
    #[error("oracle: {0}")]
    Oracle(#[from] OracleError),
    #[error("degeneracy: statistics {0:?} nearly constant across draws")]
    Degenerate(Vec<String>),
}

impl From<EstimateError> for CliError {
    fn from(e: EstimateError) -> Self {
        match e {
            EstimateError::Model(m) => CliError::Model(m),
            other => CliError::Estimate(other),
        }
    }
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Formula { .. } | CliError::Usage(_) | CliError::Model(_) => exit::PARSE,
            CliError::Load(LoadError::Io { .. }) | CliError::Write { .. } => exit::IO,
            CliError::Load(_) => exit::PARSE,
            CliError::Oracle(OracleError::Model(_)) => exit::PARSE,
            CliError::Estimate(_) | CliError::Oracle(_) => exit::ESTIMATION,
            CliError::Degenerate(_) => exit::DEGENERATE,
        }
    }
}
