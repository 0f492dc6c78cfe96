//! Top-level error type and its process exit codes.

use thiserror::Error;

use crate::config::ConfigError;
use crate::io::DataError;
use crate::kernel::SimError;
use crate::stats::StatsError;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("simulation: {0}")]
    Sim(#[from] SimError),
    #[error("book seeding: {0}")]
    Book(#[from] crate::book::BookError),
    #[error("{context}: {source}")]
    Io {
        context: String,
        source: std::io::Error,
    },
    #[error("{0}")]
    Output(String),
}

impl Error {
    pub fn io(context: impl Into<String>, source: std::io::Error) -> Self {
        Error::Io {
            context: context.into(),
            source,
        }
    }

    /// 2 for configuration problems, 3 for unreadable or unwritable data,
    /// 4 for numerical failures. Usage errors (1) are raised by the CLI parser.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::Sim(_) | Error::Book(_) => 2,
            Error::Data(_) | Error::Io { .. } | Error::Output(_) => 3,
            Error::Stats(_) => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
