//! Detection scoring against ground-truth injection masks: confusion counts,
//! precision/recall/F1, and the published reference metrics for comparison.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::ModelName;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

impl ConfusionCounts {
    pub fn total(&self) -> usize {
        self.true_positives + self.false_positives + self.false_negatives + self.true_negatives
    }
}

/// Pointwise confusion counts with an optional tolerance window.
///
/// With `tolerance` w > 0 a flagged point within w samples of any true
/// positive counts as a true positive without consuming anything (set
/// semantics); a truth point with no flag within w samples is a false
/// negative. Every index lands in exactly one cell, so the counts sum to the
/// evaluated length.
pub fn confusion(flags: &[bool], mask: &[bool], tolerance: usize) -> Result<ConfusionCounts> {
    if flags.len() != mask.len() {
        return Err(Error::Alignment(format!(
            "flags length {} does not match mask length {}",
            flags.len(),
            mask.len()
        )));
    }
    let n = flags.len();
    let near = |source: &[bool], i: usize| -> bool {
        let lo = i.saturating_sub(tolerance);
        let hi = (i + tolerance + 1).min(n);
        source[lo..hi].iter().any(|v| *v)
    };
    let mut counts = ConfusionCounts::default();
    for i in 0..n {
        if flags[i] {
            if near(mask, i) {
                counts.true_positives += 1;
            } else {
                counts.false_positives += 1;
            }
        } else if mask[i] && !near(flags, i) {
            counts.false_negatives += 1;
        } else {
            counts.true_negatives += 1;
        }
    }
    Ok(counts)
}

// Zero-denominator metrics return 0 so degenerate runs still report.

pub fn precision(counts: &ConfusionCounts) -> f64 {
    let den = counts.true_positives + counts.false_positives;
    if den == 0 {
        0.0
    } else {
        counts.true_positives as f64 / den as f64
    }
}

pub fn recall(counts: &ConfusionCounts) -> f64 {
    let den = counts.true_positives + counts.false_negatives;
    if den == 0 {
        0.0
    } else {
        counts.true_positives as f64 / den as f64
    }
}

pub fn f1(counts: &ConfusionCounts) -> f64 {
    let p = precision(counts);
    let r = recall(counts);
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// One row of the published per-model results (percentages).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceRow {
    pub model: ModelName,
    pub noise_filtration: bool,
    pub recall_pct: f64,
    pub precision_pct: f64,
    pub f1_pct: f64,
}

/// Published benchmark metrics for the eight (model × filtration) cells,
/// kept as reference constants for side-by-side report comparison. These are
/// not test targets: they come from a proprietary dataset and an unspecified
/// training budget.
pub fn reference_table() -> Vec<ReferenceRow> {
    let row = |model, filt, recall_pct, precision_pct, f1_pct| ReferenceRow {
        model,
        noise_filtration: filt,
        recall_pct,
        precision_pct,
        f1_pct,
    };
    vec![
        row(ModelName::Cnn, true, 94.67, 87.65, 91.03),
        row(ModelName::Cnn, false, 86.67, 94.20, 90.28),
        row(ModelName::Lstm, true, 90.38, 94.0, 92.16),
        row(ModelName::Lstm, false, 91.23, 69.33, 78.79),
        row(ModelName::BiLstm, true, 94.05, 98.75, 96.34),
        row(ModelName::BiLstm, false, 82.0, 91.11, 86.32),
        row(ModelName::CLstm, true, 97.50, 96.30, 96.89),
        row(ModelName::CLstm, false, 94.12, 96.0, 95.05),
    ]
}

pub fn reference_row(model: ModelName, noise_filtration: bool) -> ReferenceRow {
    reference_table()
        .into_iter()
        .find(|r| r.model == model && r.noise_filtration == noise_filtration)
        .expect("all eight cells are present")
}

/// Seeds that drove the stochastic stages of a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReportSeeds {
    pub synth: Option<u64>,
    pub inject: u64,
    pub train: u64,
}

/// Evaluation outcome of one pipeline run plus the configuration echo needed
/// to reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: ModelName,
    pub noise_filtration: bool,
    pub recall_pct: f64,
    pub precision_pct: f64,
    pub f1_pct: f64,
    pub counts: ConfusionCounts,
    pub threshold_k: f64,
    pub threshold: f64,
    pub filter_order: usize,
    pub window_len: usize,
    pub horizon: usize,
    pub tolerance: usize,
    pub seeds: ReportSeeds,
    pub scaler: crate::preprocess::ScalerParams,
    /// Metric convention echo: zero-denominator metrics report 0.
    pub zero_division: String,
}

impl EvalReport {
    /// Percentages must agree with the counts to within 1e-9.
    pub fn check_consistency(&self) -> Result<()> {
        let checks = [
            (self.precision_pct, precision(&self.counts) * 100.0, "precision"),
            (self.recall_pct, recall(&self.counts) * 100.0, "recall"),
            (self.f1_pct, f1(&self.counts) * 100.0, "f1"),
        ];
        for (stored, derived, name) in checks {
            if (stored - derived).abs() > 1e-9 {
                return Err(Error::Numeric(format!(
                    "{name} {stored} inconsistent with counts-derived {derived}"
                )));
            }
        }
        Ok(())
    }

    /// Serializes after validating metric/count consistency.
    pub fn to_json(&self) -> Result<String> {
        self.check_consistency()?;
        Ok(serde_json::to_string_pretty(self)?)
    }
}
