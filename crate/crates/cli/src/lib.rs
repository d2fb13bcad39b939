//! Pipeline orchestration for the PMU anomaly-detection toolchain: run
//! configuration, per-stage artifact I/O, the stage commands themselves, and
//! the reproducibility manifest.

pub mod artifacts;
pub mod config;
pub mod error;
pub mod manifest;
pub mod pipeline;

pub use config::{derive_seed, InputConfig, RunConfig};
pub use error::{CliError, Result};
