//! Stage-per-command pipeline. Every stage reads its declared upstream
//! artifacts from disk and writes its own, so `run-all` is exactly the
//! composition of the individual commands.

use std::fs;
use std::path::{Path, PathBuf};

use pmu_sentinel::detect::{
    apply_threshold, calibrate_threshold, residual_scores, statistical_baseline,
};
use pmu_sentinel::evaluate::{
    confusion, f1, precision, recall, reference_row, EvalReport, ReportSeeds,
};
use pmu_sentinel::inject::{estimate_noise_floor, inject_gaussian_series};
use pmu_sentinel::models::{build, train, LayerSpec, ModelName, ModelSpec, TrainedModel};
use pmu_sentinel::pmu_data::{
    generate_synthetic, load_csv, save_csv, validate, ChannelKind, PmuDataset,
};
use pmu_sentinel::preprocess::{
    make_windows, median_filter, split_point, unwrap_angles, ScalerParams,
};

use crate::artifacts::{self, DetectInfo, PreprocessInfo};
use crate::config::{cell_dir_name, InputConfig, ModelConfig, RunConfig};
use crate::error::{io_err, CliError, Result};
use crate::manifest;

fn in_stage<T>(stage: &str, result: Result<T>) -> Result<T> {
    result.map_err(|source| CliError::Stage {
        stage: stage.to_string(),
        source: Box::new(source),
    })
}

fn ensure_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

/// The layer stack a model configuration resolves to. With
/// `bilstm_per_direction` off, the Bi-LSTM's first layer halves its
/// per-direction units so the concatenated width matches the reference total.
pub fn model_spec(model: &ModelConfig) -> ModelSpec {
    let mut spec = build(model.name);
    if model.name == ModelName::BiLstm && !model.bilstm_per_direction {
        if let Some(LayerSpec::BiLstm { hidden_units }) = spec.layers.first_mut() {
            *hidden_units = (*hidden_units / 2).max(1);
        }
    }
    spec
}

/// Generates the synthetic dataset configured under `input.synth`.
pub fn stage_synth(cfg: &RunConfig, dir: &Path) -> Result<()> {
    in_stage("synth", || -> Result<()> {
        ensure_dir(dir)?;
        let synth_cfg = match &cfg.input {
            InputConfig::Synth(s) => s,
            InputConfig::Csv { .. } => {
                return Err(CliError::Config(
                    "synth requires an input.synth configuration".into(),
                ))
            }
        };
        let dataset = generate_synthetic(synth_cfg)?;
        save_csv(&dataset, &artifacts::dataset_path(dir))?;
        Ok(())
    }())
}

/// Ingests and validates a user-supplied CSV, writing the canonical copy.
pub fn stage_ingest(cfg: &RunConfig, dir: &Path) -> Result<()> {
    in_stage("ingest", || -> Result<()> {
        ensure_dir(dir)?;
        let source = match &cfg.input {
            InputConfig::Csv { path } => path,
            InputConfig::Synth(_) => {
                return Err(CliError::Config(
                    "ingest requires an input.csv configuration".into(),
                ))
            }
        };
        artifacts::require(source)?;
        let dataset = load_csv(source)?;
        let violations = validate(&dataset);
        if let Some(first) = violations.first() {
            return Err(CliError::Core(pmu_sentinel::Error::Integrity(format!(
                "{} violation(s), first: {first}",
                violations.len()
            ))));
        }
        save_csv(&dataset, &artifacts::dataset_path(dir))?;
        Ok(())
    }())
}

/// Synth or ingest, depending on the configured input.
pub fn ensure_dataset(cfg: &RunConfig, dir: &Path) -> Result<()> {
    match &cfg.input {
        InputConfig::Synth(_) => stage_synth(cfg, dir),
        InputConfig::Csv { .. } => stage_ingest(cfg, dir),
    }
}

fn load_dataset(path: &Path) -> Result<PmuDataset> {
    artifacts::require(path)?;
    Ok(load_csv(path)?)
}

/// Channel selection, angle unwrapping, optional median filtration, the
/// chronological split, and scaler fitting on the training portion.
pub fn stage_preprocess(cfg: &RunConfig, dir: &Path, dataset_path: &Path) -> Result<()> {
    in_stage("preprocess", || -> Result<()> {
        ensure_dir(dir)?;
        let dataset = load_dataset(dataset_path)?;
        let channel = dataset.select(&cfg.channel).ok_or_else(|| {
            CliError::Core(pmu_sentinel::Error::Parameter(format!(
                "channel {}/{} not present in dataset",
                cfg.channel.station, cfg.channel.kind
            )))
        })?;
        let unwrapped = channel.kind == ChannelKind::VoltageAngle;
        let raw = if unwrapped {
            unwrap_angles(&channel.values)
        } else {
            channel.values.clone()
        };
        let value = if cfg.preprocess.filter_enabled {
            median_filter(&raw, cfg.preprocess.filter_order)?
        } else {
            raw.clone()
        };
        let split = split_point(value.len(), cfg.preprocess.train_fraction)?;
        if split == 0 || split == value.len() {
            return Err(CliError::Config(format!(
                "train fraction {} leaves an empty split for {} samples",
                cfg.preprocess.train_fraction,
                value.len()
            )));
        }
        let scaler = ScalerParams::fit_single(&value[..split])?;
        let info = PreprocessInfo {
            channel: cfg.channel.clone(),
            unwrapped,
            filter_enabled: cfg.preprocess.filter_enabled,
            filter_order: cfg.preprocess.filter_order,
            window_len: cfg.preprocess.window_len,
            horizon: cfg.preprocess.horizon,
            train_fraction: cfg.preprocess.train_fraction,
            split_point: split,
            series_len: value.len(),
            noise_floor_raw: estimate_noise_floor(&raw),
            scaler,
        };
        artifacts::write_preprocessed(dir, &raw, &value)?;
        artifacts::write_json(&dir.join(artifacts::PREPROCESS_JSON), &info)?;
        Ok(())
    }())
}

/// Adds the configured Gaussian bursts to the preprocessed series. The burst
/// std is `sigma_multiplier` times the raw-series noise floor, so filtered
/// and unfiltered runs face an identical attack.
pub fn stage_inject(cfg: &RunConfig, dir: &Path) -> Result<()> {
    in_stage("inject", || -> Result<()> {
        let (_, value) = artifacts::read_preprocessed(dir)?;
        let info: PreprocessInfo = artifacts::read_json(&dir.join(artifacts::PREPROCESS_JSON))?;
        let sigma = cfg.inject.sigma_multiplier * info.noise_floor_raw;
        let (injected, mask) =
            inject_gaussian_series(&value, cfg.inject.count, sigma, 30.0, cfg.inject.seed)?;
        artifacts::write_injected(dir, &injected)?;
        artifacts::write_mask(dir, &mask.flags, &mask.episodes)?;
        Ok(())
    }())
}

/// Trains the configured forecaster on the scaled clean training windows.
pub fn stage_train(cfg: &RunConfig, dir: &Path) -> Result<()> {
    in_stage("train", || -> Result<()> {
        let (_, value) = artifacts::read_preprocessed(dir)?;
        let info: PreprocessInfo = artifacts::read_json(&dir.join(artifacts::PREPROCESS_JSON))?;
        let scaled = info.scaler.apply(0, &value[..info.split_point]);
        let windows = make_windows(&scaled, info.window_len, info.horizon)?;
        let spec = model_spec(&cfg.model);
        let (net, history) = train(&spec, &windows, &cfg.model.train)?;
        let model = TrainedModel::from_network(&spec, info.window_len, 1, &net);
        artifacts::write_text(&dir.join(artifacts::MODEL_JSON), &model.to_json()?)?;
        artifacts::write_loss_history(dir, &history)?;
        Ok(())
    }())
}

/// Scores the injected stream, calibrates the threshold on the clean
/// training residuals, and runs the statistical cross-check detector.
pub fn stage_detect(cfg: &RunConfig, dir: &Path) -> Result<()> {
    in_stage("detect", || -> Result<()> {
        let model_path = dir.join(artifacts::MODEL_JSON);
        let model = TrainedModel::from_json(&artifacts::read_text(&model_path)?)?;
        let mut net = model.to_network()?;
        let (_, value) = artifacts::read_preprocessed(dir)?;
        let info: PreprocessInfo = artifacts::read_json(&dir.join(artifacts::PREPROCESS_JSON))?;
        let injected = artifacts::read_injected(dir)?;

        // Threshold comes from the model predicting its own clean training data.
        let scaled_train = info.scaler.apply(0, &value[..info.split_point]);
        let train_windows = make_windows(&scaled_train, info.window_len, info.horizon)?;
        let train_scores = residual_scores(&mut net, &train_windows)?;
        let threshold = calibrate_threshold(&train_scores, cfg.detect.k)?;

        let scaled_injected = info.scaler.apply(0, &injected);
        let windows = make_windows(&scaled_injected, info.window_len, info.horizon)?;
        let scores = residual_scores(&mut net, &windows)?;
        let result = apply_threshold(&scores, threshold, windows.window_offset());
        result.check_consistency()?;

        let baseline = statistical_baseline(&injected, info.filter_order, cfg.detect.baseline_z)?;

        artifacts::write_scores(dir, result.window_offset, &result.scores, &result.flags)?;
        artifacts::write_baseline(dir, &baseline)?;
        artifacts::write_json(
            &dir.join(artifacts::DETECT_JSON),
            &DetectInfo {
                threshold,
                k: cfg.detect.k,
                window_offset: result.window_offset,
                baseline_z: cfg.detect.baseline_z,
                train_score_count: train_scores.len(),
            },
        )?;
        Ok(())
    }())
}

/// Calibration cross-check between the neural detector and the statistical
/// baseline, written alongside the report.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CalibrationSummary {
    pub baseline_z: f64,
    /// Fraction of injected timesteps (within the scored region) the neural
    /// detector flagged.
    pub neural_injected_recall: f64,
    /// Fraction of all injected timesteps the baseline flagged.
    pub baseline_injected_recall: f64,
    pub episodes_total: usize,
    pub episodes_detected_by_neural: usize,
    pub episodes_detected_by_baseline: usize,
    pub episodes_detected_by_both: usize,
}

/// Scores detections against the ground-truth mask and writes the report.
pub fn stage_eval(cfg: &RunConfig, dir: &Path) -> Result<EvalReport> {
    in_stage("eval", || -> Result<EvalReport> {
        let (offset, scores, flags) = artifacts::read_scores(dir)?;
        let mask = artifacts::read_mask(dir)?;
        let episodes = artifacts::read_episodes(dir)?;
        let baseline = artifacts::read_baseline(dir)?;
        let detect_info: DetectInfo = artifacts::read_json(&dir.join(artifacts::DETECT_JSON))?;
        let info: PreprocessInfo = artifacts::read_json(&dir.join(artifacts::PREPROCESS_JSON))?;

        if mask.len() < offset + flags.len() {
            return Err(CliError::Core(pmu_sentinel::Error::Alignment(format!(
                "mask of {} samples cannot align with {} scores at offset {offset}",
                mask.len(),
                flags.len()
            ))));
        }
        let aligned_mask = &mask[offset..offset + flags.len()];
        let counts = confusion(&flags, aligned_mask, cfg.evaluate.tolerance)?;
        let report = EvalReport {
            model: cfg.model.name,
            noise_filtration: cfg.preprocess.filter_enabled,
            recall_pct: recall(&counts) * 100.0,
            precision_pct: precision(&counts) * 100.0,
            f1_pct: f1(&counts) * 100.0,
            counts,
            threshold_k: detect_info.k,
            threshold: detect_info.threshold,
            filter_order: info.filter_order,
            window_len: info.window_len,
            horizon: info.horizon,
            tolerance: cfg.evaluate.tolerance,
            seeds: ReportSeeds {
                synth: match &cfg.input {
                    InputConfig::Synth(s) => Some(s.seed),
                    InputConfig::Csv { .. } => None,
                },
                inject: cfg.inject.seed,
                train: cfg.model.train.seed,
            },
            scaler: info.scaler.clone(),
            zero_division: "returns_zero".to_string(),
        };
        artifacts::write_text(&dir.join(artifacts::REPORT_JSON), &report.to_json()?)?;
        artifacts::write_text(
            &dir.join(artifacts::REPORT_CSV),
            &report_csv_text(std::slice::from_ref(&report)),
        )?;

        // Cross-check: pointwise and per-episode agreement of the two detectors.
        let injected_scored = aligned_mask.iter().filter(|m| **m).count();
        let neural_hits = aligned_mask
            .iter()
            .zip(flags.iter())
            .filter(|(m, f)| **m && **f)
            .count();
        let injected_total = mask.iter().filter(|m| **m).count();
        let baseline_hits = mask
            .iter()
            .zip(baseline.iter())
            .filter(|(m, f)| **m && **f)
            .count();
        let fraction = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
        let mut by_neural = 0;
        let mut by_baseline = 0;
        let mut by_both = 0;
        for e in &episodes {
            let neural = (e.start.max(offset)..e.end.max(offset))
                .any(|i| flags.get(i - offset).copied().unwrap_or(false));
            let base = (e.start..e.end).any(|i| baseline.get(i).copied().unwrap_or(false));
            by_neural += neural as usize;
            by_baseline += base as usize;
            by_both += (neural && base) as usize;
        }
        artifacts::write_json(
            &dir.join(artifacts::CALIBRATION_JSON),
            &CalibrationSummary {
                baseline_z: detect_info.baseline_z,
                neural_injected_recall: fraction(neural_hits, injected_scored),
                baseline_injected_recall: fraction(baseline_hits, injected_total),
                episodes_total: episodes.len(),
                episodes_detected_by_neural: by_neural,
                episodes_detected_by_baseline: by_baseline,
                episodes_detected_by_both: by_both,
            },
        )?;
        let _ = scores;
        Ok(report)
    }())
}

fn report_csv_text(reports: &[EvalReport]) -> String {
    let mut out = String::from("model,noise_filtration,recall,precision,f1\n");
    for r in reports {
        out.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2}\n",
            r.model,
            if r.noise_filtration { "yes" } else { "no" },
            r.recall_pct,
            r.precision_pct,
            r.f1_pct
        ));
    }
    out
}

/// Runs preprocess → inject → train → detect → eval for one cell.
pub fn run_cell(cfg: &RunConfig, dir: &Path, dataset_path: &Path) -> Result<EvalReport> {
    stage_preprocess(cfg, dir, dataset_path)?;
    stage_inject(cfg, dir)?;
    stage_train(cfg, dir)?;
    stage_detect(cfg, dir)?;
    stage_eval(cfg, dir)
}

/// Full pipeline: dataset once, then every configured (model × filtration)
/// cell, a comparison table with the published reference metrics, and a
/// manifest with artifact hashes. `threads` caps cell parallelism.
pub fn run_all(cfg: &RunConfig, dir: &Path, threads: usize) -> Result<Vec<EvalReport>> {
    ensure_dataset(cfg, dir)?;
    let dataset_path = artifacts::dataset_path(dir);
    let cells = cfg.cells();

    let mut reports: Vec<EvalReport> = Vec::with_capacity(cells.len());
    let chunk_size = threads.max(1);
    for chunk in cells.chunks(chunk_size) {
        let outcomes: Vec<Result<EvalReport>> = std::thread::scope(|scope| {
            let handles: Vec<_> = chunk
                .iter()
                .map(|&(model, filt)| {
                    let cell_cfg = cfg.cell_config(model, filt);
                    let cell_dir = dir.join(cell_dir_name(model, filt));
                    let dataset_path = dataset_path.clone();
                    scope.spawn(move || {
                        run_cell(&cell_cfg, &cell_dir, &dataset_path).map_err(|source| {
                            CliError::Stage {
                                stage: cell_dir_name(model, filt),
                                source: Box::new(source),
                            }
                        })
                    })
                })
                .collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("cell thread panicked"))
                .collect()
        });
        for outcome in outcomes {
            reports.push(outcome?);
        }
    }

    // Comparison table with the published metrics side by side.
    let mut comparison = String::from(
        "model,noise_filtration,recall,precision,f1,reference_recall,reference_precision,reference_f1\n",
    );
    for report in &reports {
        let reference = reference_row(report.model, report.noise_filtration);
        comparison.push_str(&format!(
            "{},{},{:.2},{:.2},{:.2},{:.2},{:.2},{:.2}\n",
            report.model,
            if report.noise_filtration { "yes" } else { "no" },
            report.recall_pct,
            report.precision_pct,
            report.f1_pct,
            reference.recall_pct,
            reference.precision_pct,
            reference.f1_pct,
        ));
    }
    artifacts::write_text(&dir.join(artifacts::COMPARISON_CSV), &comparison)?;

    manifest::write_manifest(cfg, dir, &cells)?;
    Ok(reports)
}

/// Tidy plot-ready exports from a completed run directory.
pub fn export_plots(cfg: &RunConfig, dir: &Path) -> Result<()> {
    in_stage("export-plots", || -> Result<()> {
        // filter_compare.csv: raw vs filtered trace.
        let (raw, value) = artifacts::read_preprocessed(dir)?;
        let mut filter_compare = String::from("index,raw,filtered\n");
        for (i, (r, v)) in raw.iter().zip(value.iter()).enumerate() {
            filter_compare.push_str(&format!("{i},{r},{v}\n"));
        }
        artifacts::write_text(&dir.join("filter_compare.csv"), &filter_compare)?;

        // angle_compare.csv: the selected station's stored (wrapped) angle
        // channel against its unwrapped form. The dataset sits in the run
        // dir, or one level up for a matrix cell.
        let dataset_path = [dir.join(artifacts::DATASET_CSV), {
            let mut p = PathBuf::from(dir);
            p.pop();
            p.join(artifacts::DATASET_CSV)
        }]
        .into_iter()
        .find(|p| p.exists())
        .ok_or_else(|| CliError::Dependency(dir.join(artifacts::DATASET_CSV)))?;
        let dataset = load_dataset(&dataset_path)?;
        let angle = dataset
            .channel(&cfg.channel.station, ChannelKind::VoltageAngle)
            .ok_or_else(|| {
                CliError::Core(pmu_sentinel::Error::Parameter(format!(
                    "station {} has no angle channel",
                    cfg.channel.station
                )))
            })?;
        let unwrapped = unwrap_angles(&angle.values);
        let mut angle_compare = String::from("index,wrapped,unwrapped\n");
        for (i, (w, u)) in angle.values.iter().zip(unwrapped.iter()).enumerate() {
            angle_compare.push_str(&format!("{i},{w},{u}\n"));
        }
        artifacts::write_text(&dir.join("angle_compare.csv"), &angle_compare)?;

        // detections.csv: truth vs detection per scored timestep.
        let (offset, scores, flags) = artifacts::read_scores(dir)?;
        let mask = artifacts::read_mask(dir)?;
        let mut detections = String::from("index,truth_flag,detected_flag,score\n");
        for (i, (score, flag)) in scores.iter().zip(flags.iter()).enumerate() {
            let series_idx = i + offset;
            let truth = mask.get(series_idx).copied().unwrap_or(false);
            detections.push_str(&format!(
                "{series_idx},{},{},{score}\n",
                truth as u8, *flag as u8
            ));
        }
        artifacts::write_text(&dir.join("detections.csv"), &detections)?;
        Ok(())
    }())
}
