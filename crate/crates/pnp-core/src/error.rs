//! Crate-level error type.

use thiserror::Error;

use crate::channel::ChannelError;
use crate::config::ConfigError;
use crate::oracle::OracleError;
use crate::protocol::ProtocolError;
use crate::report::ReportError;

#[derive(Debug, Error)]
pub enum Error {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
    #[error(transparent)]
    Oracle(#[from] OracleError),
    #[error(transparent)]
    Report(#[from] ReportError),
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
}

impl Error {
    /// True for errors the caller could fix in the configuration, as
    /// opposed to runtime failures.
    pub fn is_config(&self) -> bool {
        matches!(self, Error::Config(_))
    }
}
