//! Command-line front end: synthetic data generation, dataset inspection,
//! single evaluations and full result tables driven by a TOML config.
//!
//! Exit codes: 0 success, 2 usage or config error, 3 I/O error,
//! 4 numerical or pipeline failure.

pub mod commands;
pub mod config;
mod error;

pub use commands::{build_table, cmd_eval, cmd_info, cmd_synth, cmd_table, execute, run, Cli, Command, Globals, TableReport};
pub use config::{PipelineEntry, RunConfig, SubjectEntry};
pub use error::CliError;
