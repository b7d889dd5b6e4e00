use std::path::PathBuf;

/// A configuration problem, with the dotted path of the offending field.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{path}: {message}")]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: impl Into<String>, message: impl Into<String>) -> Self {
        ConfigError {
            path: path.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("invalid config: {0}")]
    Parse(String),
    #[error("invalid config: {0}")]
    Config(#[from] ConfigError),
    #[error("{context}: {source}")]
    Sim {
        context: String,
        source: tukey_core::Error,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("thread pool: {0}")]
    Threads(String),
}

pub(crate) trait SimContext<T> {
    fn context(self, what: impl Into<String>) -> Result<T, RunError>;
}

impl<T> SimContext<T> for tukey_core::Result<T> {
    fn context(self, what: impl Into<String>) -> Result<T, RunError> {
        self.map_err(|source| RunError::Sim {
            context: what.into(),
            source,
        })
    }
}
