//! Configuration, pipelines and report emission for the `woldlab` binary.

pub mod config;
pub mod error;
pub mod fixtures;
pub mod output;
pub mod report;
pub mod run;

pub use config::{validate_config, Command, Overrides, RunConfig};
pub use error::CliError;
pub use report::{RunOutput, RunReport};
pub use run::run;
