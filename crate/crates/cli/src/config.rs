//! Run configuration: one JSON document keyed by pipeline stage.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use pmu_sentinel::models::{ModelName, TrainConfig};
use pmu_sentinel::pmu_data::{ChannelSelector, SynthConfig};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub input: InputConfig,
    pub channel: ChannelSelector,
    #[serde(default)]
    pub preprocess: PreprocessConfig,
    pub inject: InjectConfig,
    pub model: ModelConfig,
    #[serde(default)]
    pub detect: DetectConfig,
    #[serde(default)]
    pub evaluate: EvaluateConfig,
    /// When present, `run-all` executes every (model × filtration) cell.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixConfig>,
    /// Master seed; deriving the per-stage seeds from it overrides them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputConfig {
    Synth(SynthConfig),
    Csv { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub filter_enabled: bool,
    pub filter_order: usize,
    pub window_len: usize,
    pub horizon: usize,
    pub train_fraction: f64,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        PreprocessConfig {
            filter_enabled: true,
            filter_order: pmu_sentinel::preprocess::DEFAULT_FILTER_ORDER,
            window_len: pmu_sentinel::preprocess::DEFAULT_WINDOW_LEN,
            horizon: pmu_sentinel::preprocess::DEFAULT_HORIZON,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InjectConfig {
    pub count: usize,
    /// Injected noise std as a multiple of the estimated raw noise floor.
    #[serde(default = "default_sigma_multiplier")]
    pub sigma_multiplier: f64,
    pub seed: u64,
}

fn default_sigma_multiplier() -> f64 {
    5.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub name: ModelName,
    /// Bi-LSTM hidden units are per direction by default; disable to halve
    /// them so the concatenated width matches the single-LSTM total.
    #[serde(default = "default_true")]
    pub bilstm_per_direction: bool,
    pub train: TrainConfig,
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectConfig {
    /// Threshold constant: mean + k·std over training residuals.
    pub k: f64,
    /// z threshold of the statistical cross-check detector.
    pub baseline_z: f64,
}

impl Default for DetectConfig {
    fn default() -> Self {
        DetectConfig {
            k: 3.0,
            baseline_z: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvaluateConfig {
    /// Tolerance window in samples for confusion matching.
    pub tolerance: usize,
}

impl Default for EvaluateConfig {
    fn default() -> Self {
        EvaluateConfig { tolerance: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixConfig {
    pub models: Vec<ModelName>,
    pub filtration: Vec<bool>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<RunConfig> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &std::path::Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(crate::error::io_err(path))?;
        RunConfig::from_json(&text)
    }

    /// Resolves the effective configuration: an explicit master seed (from
    /// the file or `--seed`) rederives every per-stage seed.
    pub fn effective(mut self, seed_override: Option<u64>) -> RunConfig {
        if let Some(master) = seed_override.or(self.master_seed) {
            self.master_seed = Some(master);
            if let InputConfig::Synth(cfg) = &mut self.input {
                cfg.seed = derive_seed(master, 1);
            }
            self.inject.seed = derive_seed(master, 2);
            self.model.train.seed = derive_seed(master, 3);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        if let InputConfig::Synth(cfg) = &self.input {
            cfg.validate().map_err(CliError::Core)?;
        }
        self.model.train.validate().map_err(CliError::Core)?;
        if !(self.preprocess.train_fraction > 0.0 && self.preprocess.train_fraction < 1.0) {
            return Err(CliError::Config(format!(
                "train_fraction must lie in (0, 1), got {}",
                self.preprocess.train_fraction
            )));
        }
        if self.preprocess.window_len < 1 || self.preprocess.horizon < 1 {
            return Err(CliError::Config(
                "window_len and horizon must be >= 1".into(),
            ));
        }
        if let Some(matrix) = &self.matrix {
            if matrix.models.is_empty() || matrix.filtration.is_empty() {
                return Err(CliError::Config(
                    "matrix models and filtration lists must be non-empty".into(),
                ));
            }
        }
        Ok(())
    }

    /// The (model, filtration) cells `run-all` executes, in declared order.
    pub fn cells(&self) -> Vec<(ModelName, bool)> {
        match &self.matrix {
            Some(matrix) => {
                let mut out = Vec::new();
                for &model in &matrix.models {
                    for &filt in &matrix.filtration {
                        out.push((model, filt));
                    }
                }
                out
            }
            None => vec![(self.model.name, self.preprocess.filter_enabled)],
        }
    }

    /// Per-cell configuration: same run, one model, one filtration setting.
    pub fn cell_config(&self, model: ModelName, filtration: bool) -> RunConfig {
        let mut cfg = self.clone();
        cfg.model.name = model;
        cfg.preprocess.filter_enabled = filtration;
        cfg.matrix = None;
        cfg
    }
}

/// splitmix64; stage seeds derive from the master seed by fixed tags.
pub fn derive_seed(master: u64, tag: u64) -> u64 {
    let mut x = master
        .wrapping_add(tag.wrapping_mul(0x9E37_79B9_7F4A_7C15))
        .wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

pub fn cell_dir_name(model: ModelName, filtration: bool) -> String {
    format!(
        "cell_{}_{}",
        model.as_str().to_ascii_lowercase(),
        if filtration { "filtered" } else { "unfiltered" }
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal_json() -> String {
        r#"{
            "input": {"synth": {
                "amplitude_peak": 325.0,
                "nominal_frequency_hz": 60.02,
                "initial_phase_deg": 10.0,
                "duration_s": 60.0,
                "noise_floor_sigma": 0.5,
                "seed": 11
            }},
            "channel": {"station": "S1", "kind": "voltage_magnitude"},
            "inject": {"count": 2, "seed": 22},
            "model": {"name": "CNN", "train": {
                "epochs": 3, "batch_size": 32, "learning_rate": 0.001,
                "seed": 33, "early_stop_patience": null
            }}
        }"#
        .to_string()
    }

    #[test]
    fn defaults_fill_optional_sections() {
        let cfg = RunConfig::from_json(&minimal_json()).unwrap();
        cfg.validate().unwrap();
        assert!(cfg.preprocess.filter_enabled);
        assert_eq!(cfg.preprocess.filter_order, 15);
        assert_eq!(cfg.detect.k, 3.0);
        assert_eq!(cfg.inject.sigma_multiplier, 5.0);
        assert_eq!(cfg.evaluate.tolerance, 0);
    }

    #[test]
    fn master_seed_rederives_stage_seeds() {
        let cfg = RunConfig::from_json(&minimal_json()).unwrap();
        let eff = cfg.clone().effective(Some(99));
        assert_eq!(eff.master_seed, Some(99));
        assert_ne!(eff.inject.seed, cfg.inject.seed);
        assert_ne!(eff.model.train.seed, cfg.model.train.seed);
        // Same master, same derivation.
        let again = cfg.effective(Some(99));
        assert_eq!(eff, again);
    }

    #[test]
    fn cells_without_matrix_is_the_single_configured_cell() {
        let cfg = RunConfig::from_json(&minimal_json()).unwrap();
        assert_eq!(cfg.cells(), vec![(ModelName::Cnn, true)]);
    }

    #[test]
    fn matrix_cells_expand_in_order() {
        let mut cfg = RunConfig::from_json(&minimal_json()).unwrap();
        cfg.matrix = Some(MatrixConfig {
            models: vec![ModelName::Cnn, ModelName::Lstm],
            filtration: vec![true, false],
        });
        assert_eq!(
            cfg.cells(),
            vec![
                (ModelName::Cnn, true),
                (ModelName::Cnn, false),
                (ModelName::Lstm, true),
                (ModelName::Lstm, false),
            ]
        );
    }

    #[test]
    fn unknown_fields_are_rejected() {
        let bad = minimal_json().replace("\"inject\"", "\"typo_field\": 1, \"inject\"");
        assert!(RunConfig::from_json(&bad).is_err());
    }
}
