//! Configuration, experiment drivers and CSV output for the `quadclt` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod experiments;
pub mod report;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiments::run;
pub use report::{Check, Report, Table};
