//! Command-line front end: configuration, dataset store, pipeline driver and
//! artifact writers behind the `entropath` binary.

pub mod commands;
pub mod config;
pub mod error;
pub mod pipeline;
pub mod report;
pub mod store;

pub use config::{LoadedConfig, PipelineConfig};
pub use error::CliError;
