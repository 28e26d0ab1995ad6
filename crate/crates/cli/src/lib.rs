//! Configuration-driven experiments over the core crate: loads a TOML
//! experiment, runs the requested checks and writes JSON reports plus a
//! CSV summary.

pub mod checks;
pub mod config;
pub mod error;
pub mod run;

pub use config::{ExperimentConfig, Overrides, Setup};
pub use error::{CliError, Status};
pub use run::{run_checks, write_corpus, Outcome, Selection};
