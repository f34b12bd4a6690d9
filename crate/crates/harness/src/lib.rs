//! Configuration, sweeps, reports and the `ascl` command line on top of
//! `ascl-core`.

pub mod cli;
pub mod config;
pub mod error;
pub mod fit;
pub mod oracle;
pub mod report;
pub mod samples;
pub mod sweep;

pub use cli::run_cli;
pub use config::{Experiment, ExperimentConfig};
pub use error::{HarnessError, Result};
pub use fit::{fit_power_law, FitResult};
