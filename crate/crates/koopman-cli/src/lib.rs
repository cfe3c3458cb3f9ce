//! Pipeline driver for the `koopman` command-line tool.

pub mod config;
pub mod error;
pub mod output;
pub mod pipeline;
pub mod study;
pub mod symbolic_file;
pub mod symbolic_suite;

pub use config::ExperimentConfig;
pub use error::CliError;
