use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("guard violation: {0}")]
    Guard(String),
    #[error(transparent)]
    Library(#[from] eqk::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    /// 1 for configuration and runtime errors, 2 for size guards.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Guard(_) => 2,
            CliError::Library(eqk::Error::QubitGuard { .. } | eqk::Error::GridGuard { .. }) => 2,
            _ => 1,
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

pub(crate) fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}
