use damctl_core::DamError;

/// Failure of a command, mapped to the process exit code.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    /// 2 for configuration and I/O problems, 3 for numeric failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 3,
        }
    }

    pub(crate) fn missing(field: &str, hint: &str) -> Self {
        CliError::Config(format!("missing required field '{field}' (pass {hint} or set it in the config file)"))
    }
}

impl From<DamError> for CliError {
    fn from(e: DamError) -> Self {
        if e.is_config_error() {
            CliError::Config(e.to_string())
        } else {
            CliError::Numeric(e.to_string())
        }
    }
}
