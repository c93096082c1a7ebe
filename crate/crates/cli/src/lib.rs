//! Library side of the `pentanodal` command-line tool: configuration,
//! certificate bundles and the command drivers.

pub mod certfile;
pub mod commands;
pub mod config;

use thiserror::Error;

/// Process exit codes. Codes below 10 concern rigorous checks and
/// configuration; codes from 10 up are advisory failures.
pub mod exit {
    pub const OK: u8 = 0;
    pub const CERTIFICATION_FAILED: u8 = 1;
    pub const USAGE: u8 = 2;
    pub const GATE_FAILED: u8 = 3;
    pub const CHECK_FAILED: u8 = 4;
    pub const IO: u8 = 5;
    pub const SEARCH_FAILED: u8 = 10;
    pub const TABLES_FAILED: u8 = 11;
    pub const CLOSEDFORM_FAILED: u8 = 12;
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("threshold gate: {0}")]
    Gate(String),
    #[error("{domain}: {source}")]
    Domain {
        domain: String,
        source: pentanodal::Error,
    },
    #[error(transparent)]
    Core(pentanodal::Error),
    #[error("i/o: {0}")]
    Io(String),
    #[error("parse: {0}")]
    Parse(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => exit::USAGE,
            CliError::Gate(_) => exit::GATE_FAILED,
            CliError::Domain { .. } => exit::CERTIFICATION_FAILED,
            CliError::Core(_) => exit::CERTIFICATION_FAILED,
            CliError::Io(_) => exit::IO,
            CliError::Parse(_) => exit::CHECK_FAILED,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
