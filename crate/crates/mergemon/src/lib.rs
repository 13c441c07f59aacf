//! Configuration, artifact writers and subcommand drivers for the
//! `mergemon` command-line tool.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;
pub mod schema;

pub use commands::RunOptions;
pub use config::RunConfig;
pub use error::CliError;
