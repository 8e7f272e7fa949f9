use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),

    #[error("data error: {0}")]
    Data(String),

    #[error("{stage} stage failed for {pair}: {source}")]
    Stage {
        stage: &'static str,
        pair: String,
        source: entropath_core::Error,
    },

    #[error("path not found: {0}")]
    PathNotFound(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) | CliError::Stage { .. } => 3,
            CliError::PathNotFound(_) => 4,
        }
    }

    pub fn io(path: &std::path::Path, err: impl std::fmt::Display) -> Self {
        CliError::Data(format!("{}: {err}", path.display()))
    }
}

impl From<entropath_core::Error> for CliError {
    fn from(err: entropath_core::Error) -> Self {
        match err {
            entropath_core::Error::Config(m) => CliError::Config(m),
            entropath_core::Error::InvalidParameters(_) => CliError::Config(err.to_string()),
            entropath_core::Error::PathNotFound { .. } => CliError::PathNotFound(err.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}
