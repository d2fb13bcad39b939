//! Anomaly detection for phasor measurement unit (PMU) time series.
//!
//! The crate covers the full pipeline: PMU data ingestion and synthesis
//! ([`pmu_data`]), signal preprocessing ([`preprocess`]), Gaussian
//! false-data-injection simulation ([`inject`]), a from-scratch neural engine
//! ([`neuralnet`]), the four forecasting architectures and their training
//! ([`models`]), residual-threshold detection ([`detect`]), and
//! precision/recall/F1 evaluation ([`evaluate`]).

pub mod detect;
pub mod error;
pub mod evaluate;
pub mod inject;
pub mod models;
pub mod neuralnet;
pub mod pmu_data;
pub mod preprocess;

pub use error::{Error, Result};
