//! File formats, experiment configs, synthetic inputs, sweeps and report output for
//! the `dpim-core` accelerator model. The `dpim` binary is a thin layer over this.

pub mod config;
mod error;
pub mod experiment;
pub mod io;
pub mod report;
pub mod sweep;
pub mod synth;

pub use error::{CliError, Result};
