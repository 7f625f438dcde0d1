use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error("search failed: {0}")]
    Search(String),
    #[error("cannot write {path}: {source}")]
    Output {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    /// Process exit code: 2 config, 3 data, 4 search or output failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Data(_) => 3,
            HarnessError::Search(_) | HarnessError::Output { .. } => 4,
        }
    }

    pub fn output(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Output {
            path: path.into(),
            source,
        }
    }
}

/// Errors while loading or splitting data.
pub(crate) fn data_error(e: psosvm::Error) -> HarnessError {
    use psosvm::Error as E;
    match e {
        E::Config(m) | E::Domain(m) => HarnessError::Config(m),
        other => HarnessError::Data(other.to_string()),
    }
}

/// Errors raised while a search or training step runs.
pub(crate) fn search_error(e: psosvm::Error) -> HarnessError {
    use psosvm::Error as E;
    match e {
        E::Config(m) | E::Domain(m) => HarnessError::Config(m),
        other => HarnessError::Search(other.to_string()),
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
