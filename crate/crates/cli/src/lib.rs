//! Command-line front end: panel I/O, fit reports, and the
//! `simulate | fit | tune | evaluate | report` subcommands.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod panel;
pub mod report;

pub use error::{CliError, CliResult, EXIT_INPUT, EXIT_NUMERICAL, EXIT_OK};
