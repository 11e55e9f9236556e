//! Config-driven experiment runner for the `c0wave` solver: uniform and
//! adaptive refinement studies written as CSV tables.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod output;
pub mod suite;

pub use config::{parse_config, ExperimentConfig, Suite};
pub use error::CliError;
pub use output::{emit_csv, read_csv, ExperimentResult, Row, COLUMNS};
pub use suite::run_suite;
