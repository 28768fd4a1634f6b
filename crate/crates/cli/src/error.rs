use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("solver failure: {0}")]
    Solver(String),
    #[error("cap exhausted: {0}")]
    CapExhausted(String),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> ExitCode {
        match self {
            CliError::Config(_) => ExitCode::from(2),
            CliError::Solver(_) | CliError::Io(_) => ExitCode::from(3),
            CliError::CapExhausted(_) => ExitCode::from(4),
        }
    }
}

impl From<blume_capel::equilibrium::EquilibriumError> for CliError {
    fn from(e: blume_capel::equilibrium::EquilibriumError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<blume_capel::exactchain::ChainError> for CliError {
    fn from(e: blume_capel::exactchain::ChainError) -> Self {
        use blume_capel::exactchain::ChainError;
        match e {
            ChainError::NotMixed { .. } => CliError::CapExhausted(format!("{e}; raise --t-max")),
            ChainError::Size { .. } | ChainError::InvalidState { .. } => CliError::Config(e.to_string()),
            other => CliError::Solver(other.to_string()),
        }
    }
}

impl From<blume_capel::dynamics::DynamicsError> for CliError {
    fn from(e: blume_capel::dynamics::DynamicsError) -> Self {
        CliError::Solver(e.to_string())
    }
}

impl From<blume_capel::scaling::ScalingError> for CliError {
    fn from(e: blume_capel::scaling::ScalingError) -> Self {
        CliError::Solver(format!("scaling fit: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
