use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config key `{key}`: {reason}")]
    Config { key: String, reason: String },
    #[error("{0}")]
    Io(String),
    #[error("{0}")]
    Engine(metamorph::Error),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("verification failed: {0}")]
    Verification(String),
}

impl From<metamorph::Error> for CliError {
    fn from(e: metamorph::Error) -> Self {
        match e {
            metamorph::Error::NonFinite { .. } => CliError::Numerical(e.to_string()),
            other => CliError::Engine(other),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e.to_string())
    }
}

impl CliError {
    /// 1 invalid input, 2 numerical failure, 3 verification failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config { .. } | CliError::Io(_) | CliError::Engine(_) => 1,
            CliError::Numerical(_) => 2,
            CliError::Verification(_) => 3,
        }
    }
}
