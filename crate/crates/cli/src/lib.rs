//! Command-line pipeline around `curre-core`: synthetic data, fold
//! splitting, cross-review, bucketing, training, evaluation and reporting.
//! Each subcommand reads and writes JSON artifacts in one output directory.

pub mod artifacts;
pub mod commands;
pub mod config;

pub use commands::{held_out_spec, run, Cli, Command};
pub use config::{load_config, parse_config, Arm, ExperimentConfig};
