//! Configuration, experiment sweeps and single-instance reports for the
//! `pinchopt` command-line tool.

pub mod config;
mod error;
pub mod experiment;
pub mod instance;
pub mod single;

pub use config::{Entries, ExperimentConfig, Metric, Scheme};
pub use error::{CliError, Result};
pub use experiment::{paired_difference, run_experiment, run_samples, write_csv, CsvRow, Samples};
