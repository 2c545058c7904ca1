//! Command-line front end: configuration, the experiment suite, CSV results
//! and SVG plots.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod table;

pub use config::{ExperimentConfig, ExperimentKind, ResolvedConfig};
pub use error::{CliError, CliResult};
