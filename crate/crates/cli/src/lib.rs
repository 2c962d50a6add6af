//! Configuration, orchestration and artifact writing for the `nltva` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::RunConfig;
pub use error::CliError;
