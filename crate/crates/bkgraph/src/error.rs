use std::path::PathBuf;

use serde::Serialize;

/// Everything that can stop a job.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("cannot read config {path}: {source}")]
    ConfigIo { path: PathBuf, source: std::io::Error },
    #[error("config does not parse: {0}")]
    Parse(String),
    #[error("config is missing {0}")]
    Missing(&'static str),
    #[error("config is inconsistent: {0}")]
    Inconsistent(String),
    #[error("invalid value for {field}: {reason}")]
    Invalid { field: &'static str, reason: String },
    #[error(transparent)]
    Core(#[from] bkgraph_core::Error),
    #[error("cannot write {path}: {reason}")]
    Output { path: PathBuf, reason: String },
    #[error("cannot start thread pool: {0}")]
    Threads(String),
}

/// Broad failure class, which fixes the exit status.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Category {
    Config,
    Validation,
    Compute,
}

impl Category {
    pub fn exit_code(self) -> i32 {
        match self {
            Category::Config => 2,
            Category::Validation => 3,
            Category::Compute => 4,
        }
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::ConfigIo { .. } => "CONFIG_IO",
            CliError::Parse(_) => "CONFIG_PARSE",
            CliError::Missing(_) => "CONFIG_MISSING",
            CliError::Inconsistent(_) => "CONFIG_INCONSISTENT",
            CliError::Invalid { .. } => "CONFIG_INVALID",
            CliError::Core(e) => e.code(),
            CliError::Output { .. } => "OUTPUT_IO",
            CliError::Threads(_) => "THREAD_POOL",
        }
    }

    pub fn category(&self) -> Category {
        match self {
            CliError::ConfigIo { .. } | CliError::Parse(_) | CliError::Missing(_) | CliError::Inconsistent(_) => {
                Category::Config
            }
            CliError::Invalid { .. } => Category::Validation,
            CliError::Core(e) if e.is_validation() => Category::Validation,
            CliError::Core(_) | CliError::Output { .. } | CliError::Threads(_) => Category::Compute,
        }
    }

    pub fn exit_code(&self) -> i32 {
        self.category().exit_code()
    }

    pub fn report(&self) -> ErrorReport {
        ErrorReport {
            status: "error",
            code: self.code(),
            category: self.category(),
            exit_code: self.exit_code(),
            message: self.to_string(),
        }
    }
}

/// Machine-readable failure record.
#[derive(Debug, Clone, Serialize)]
pub struct ErrorReport {
    pub status: &'static str,
    pub code: &'static str,
    pub category: Category,
    pub exit_code: i32,
    pub message: String,
}
