//! Configuration-driven experiments for the additive Schwarz solvers in
//! `schwarz-core`: TOML documents in, trace CSV, summary JSON and gnuplot
//! scripts out.

pub mod commands;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;
pub mod suite;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiment::{prepare, run_experiment, run_prepared, Outcome, Overrides};
