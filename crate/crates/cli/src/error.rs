use std::process::ExitCode;

use fractalga::dataio::DataError;
use fractalga::evaluate::EvalError;
use fractalga::featspace::FeatureError;
use fractalga::ga::GaError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flag, config file entry or config value.
    #[error("config: {0}")]
    Config(String),
    /// Unreadable or malformed input, or a request the data cannot satisfy.
    #[error("input: {0}")]
    Input(String),
    /// Failure while the search or an evaluation was running.
    #[error("search: {0}")]
    Search(String),
    #[error("internal: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        ExitCode::from(match self {
            CliError::Internal(_) => 1,
            CliError::Config(_) | CliError::Input(_) => 2,
            CliError::Search(_) => 3,
        })
    }

    pub fn io(path: &std::path::Path, e: std::io::Error) -> Self {
        CliError::Input(format!("{}: {e}", path.display()))
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<FeatureError> for CliError {
    fn from(e: FeatureError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<EvalError> for CliError {
    fn from(e: EvalError) -> Self {
        match e {
            EvalError::EmptySelection | EvalError::Feature(_) | EvalError::NoKinds => CliError::Input(e.to_string()),
            _ => CliError::Search(e.to_string()),
        }
    }
}

impl From<GaError> for CliError {
    fn from(e: GaError) -> Self {
        match e {
            GaError::InvalidConfig { .. } => CliError::Config(e.to_string()),
            GaError::TooLarge { .. } | GaError::ColumnOutOfRange { .. } | GaError::EmptySubset => {
                CliError::Input(e.to_string())
            }
            GaError::Eval(inner) => inner.into(),
            GaError::Evaluation { .. } => CliError::Search(e.to_string()),
        }
    }
}
