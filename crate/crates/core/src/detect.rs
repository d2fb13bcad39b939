//! Residual-threshold anomaly detection plus a model-free statistical
//! baseline used to cross-check the neural detectors.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::Network;
use crate::preprocess::{median_filter, WindowedSet};

/// Per-timestep detection outcome. `flags[i]` is `scores[i] > threshold`;
/// score `i` refers to series index `i + window_offset`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionResult {
    pub scores: Vec<f64>,
    pub threshold: f64,
    pub flags: Vec<bool>,
    pub window_offset: usize,
}

impl DetectionResult {
    /// Re-checks the structural invariants after the fact.
    pub fn check_consistency(&self) -> Result<()> {
        if self.flags.len() != self.scores.len() {
            return Err(Error::Alignment(format!(
                "{} flags for {} scores",
                self.flags.len(),
                self.scores.len()
            )));
        }
        for (i, (s, f)) in self.scores.iter().zip(self.flags.iter()).enumerate() {
            if *s < 0.0 {
                return Err(Error::Numeric(format!("negative score {s} at {i}")));
            }
            if *f != (*s > self.threshold) {
                return Err(Error::Numeric(format!(
                    "flag at {i} disagrees with threshold comparison"
                )));
            }
        }
        Ok(())
    }
}

/// Squared one-step prediction error per window target. Score `i` aligns to
/// series index `i + windowed.window_offset()`.
pub fn residual_scores(net: &mut Network, windowed: &WindowedSet) -> Result<Vec<f64>> {
    let mut scores = Vec::with_capacity(windowed.len());
    for i in 0..windowed.len() {
        let (x, target) = windowed.sample(i);
        let pred = net.predict_scalar(&x)?;
        scores.push((target - pred) * (target - pred));
    }
    Ok(scores)
}

/// Global threshold from training residuals: mean + k·std. The standard
/// deviation is the population form for determinism at any length.
pub fn calibrate_threshold(train_scores: &[f64], k: f64) -> Result<f64> {
    if train_scores.is_empty() {
        return Err(Error::Parameter(
            "cannot calibrate a threshold on empty scores".into(),
        ));
    }
    if !(k > 0.0) {
        return Err(Error::Parameter(format!("k must be positive, got {k}")));
    }
    let n = train_scores.len() as f64;
    let mean = train_scores.iter().sum::<f64>() / n;
    let var = train_scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok(mean + k * var.sqrt())
}

/// Flags every score strictly above the threshold.
pub fn apply_threshold(scores: &[f64], threshold: f64, window_offset: usize) -> DetectionResult {
    DetectionResult {
        scores: scores.to_vec(),
        threshold,
        flags: scores.iter().map(|s| *s > threshold).collect(),
        window_offset,
    }
}

/// Model-free detector: flags samples whose deviation from their own running
/// median exceeds `z_threshold` times the MAD of that deviation.
pub fn statistical_baseline(
    series: &[f64],
    filter_order: usize,
    z_threshold: f64,
) -> Result<Vec<bool>> {
    if !(z_threshold > 0.0) {
        return Err(Error::Parameter(format!(
            "z_threshold must be positive, got {z_threshold}"
        )));
    }
    let smoothed = median_filter(series, filter_order)?;
    let residual: Vec<f64> = series
        .iter()
        .zip(smoothed.iter())
        .map(|(a, b)| a - b)
        .collect();
    let scale = crate::inject::mad(&residual);
    let cut = z_threshold * scale;
    Ok(residual.iter().map(|r| r.abs() > cut).collect())
}
