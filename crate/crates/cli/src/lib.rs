//! Configuration handling and report emission for the `wdmsim` binary.

pub mod config;
pub mod reports;

pub use config::{ConfigError, FileConfig, RunConfig, RunOverrides};
pub use reports::emit_reports;
