//! Library side of the `nvsat` command-line tool: run configuration,
//! presets, output files and command execution.

// `!(x > 0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod grid;
pub mod output;
pub mod run;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, configuration or inputs; exit status 2.
    #[error("{0}")]
    Usage(String),
    /// A computation failed; exit status 1.
    #[error("{0}")]
    Numeric(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numeric(_) | CliError::Io(_) => 1,
        }
    }
}

pub use config::{preset, CommandKind, OutputFormat, Quantity, RunConfig, PRESETS};
pub use grid::GridSpec;
pub use run::run;
