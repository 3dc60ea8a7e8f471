use std::io;

use thiserror::Error;

/// Failure of a CLI run. Every variant maps to a one-word category and an exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] condexp::Error),
    #[error("grid columns differ at row {row}: {left} vs {right}")]
    GridMismatch { row: usize, left: String, right: String },
    #[error("{0}")]
    Check(String),
    #[error("{context}: {source}")]
    Io {
        context: String,
        #[source]
        source: io::Error,
    },
    #[error("{0}")]
    Csv(String),
}

impl CliError {
    pub fn io(context: impl Into<String>, source: io::Error) -> Self {
        CliError::Io {
            context: context.into(),
            source,
        }
    }

    pub fn category(&self) -> &'static str {
        match self {
            CliError::Config(_) => "ConfigError",
            CliError::Core(e) => match e {
                condexp::Error::RangeViolation { .. } | condexp::Error::Range { .. } => "RangeViolation",
                condexp::Error::TailMass { .. } => "TailMassWarning",
                condexp::Error::NonFiniteCost { .. } | condexp::Error::NonFiniteIterate { .. } => "NonFinite",
                condexp::Error::InvalidParameter(_) => "ConfigError",
                _ => "ModelError",
            },
            CliError::GridMismatch { .. } => "GridMismatch",
            CliError::Check(_) => "CheckFailed",
            CliError::Io { .. } => "IoError",
            CliError::Csv(_) => "CsvError",
        }
    }

    /// 2 for usage and configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self.category() {
            "ConfigError" => 2,
            _ => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
