//! Configuration documents, presets, CSV/JSON export and the commands behind
//! the `cavity-adapt` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod error;
pub mod export;
pub mod presets;

pub use commands::{cmd_ensemble, cmd_equilibria, cmd_run, load_config, Manifest};
pub use config::{build_system, ConfigDocument, Experiment};
pub use error::CliError;
