//! Command-line driver: JSON configuration in, CSV and JSON data files out.

pub mod acceptance;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::{CliError, CliResult};
