//! Library half of the `lab` binary: experiment catalog, configuration,
//! result tables, and cache administration.
//!
//! The binary is a thin shell over this crate. Everything that computes
//! or formats lives here so integration tests can drive experiments
//! in-process and compare their byte-exact CSV output; only argument
//! parsing, logging, and exit codes stay in `main`.

pub mod cache_admin;
pub mod catalog;
pub mod config;
pub mod error;
pub mod experiments;
pub mod table;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiments::{run, Experiment, Outcome, ALL_EXPERIMENTS};
pub use table::{ResultTable, Value};
