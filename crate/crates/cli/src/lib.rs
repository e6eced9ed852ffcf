//! Experiment driver for `qcbm`: code inspection, single runs, sweeps and
//! reports. The `qcbm` binary is a thin argument parser over these modules.

pub mod config;
pub mod error;
pub mod inspect;
pub mod report;
pub mod run;
pub mod sweep;

pub use error::{CliError, Result};
