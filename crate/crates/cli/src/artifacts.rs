//! Typed readers and writers for the per-stage artifact files. Numeric
//! columns use the shortest representation that parses back to the same f64.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use pmu_sentinel::inject::Episode;
use pmu_sentinel::models::EpochLoss;
use pmu_sentinel::pmu_data::ChannelSelector;
use pmu_sentinel::preprocess::ScalerParams;

use crate::error::{io_err, CliError, Result};

pub const DATASET_CSV: &str = "dataset.csv";
pub const PREPROCESSED_CSV: &str = "preprocessed.csv";
pub const PREPROCESS_JSON: &str = "preprocess.json";
pub const INJECTED_CSV: &str = "injected.csv";
pub const MASK_CSV: &str = "mask.csv";
pub const EPISODES_JSON: &str = "episodes.json";
pub const MODEL_JSON: &str = "model.json";
pub const LOSS_HISTORY_CSV: &str = "loss_history.csv";
pub const DETECT_JSON: &str = "detect.json";
pub const SCORES_CSV: &str = "scores.csv";
pub const BASELINE_CSV: &str = "baseline.csv";
pub const REPORT_JSON: &str = "report.json";
pub const REPORT_CSV: &str = "report.csv";
pub const CALIBRATION_JSON: &str = "calibration.json";
pub const COMPARISON_CSV: &str = "comparison.csv";
pub const MANIFEST_JSON: &str = "manifest.json";

/// Sidecar describing what preprocessing produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PreprocessInfo {
    pub channel: ChannelSelector,
    pub unwrapped: bool,
    pub filter_enabled: bool,
    pub filter_order: usize,
    pub window_len: usize,
    pub horizon: usize,
    pub train_fraction: f64,
    pub split_point: usize,
    pub series_len: usize,
    /// Noise floor of the raw (pre-filter) series; injection sigma scales it.
    pub noise_floor_raw: f64,
    pub scaler: ScalerParams,
}

/// Sidecar describing the detection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectInfo {
    pub threshold: f64,
    pub k: f64,
    pub window_offset: usize,
    pub baseline_z: f64,
    pub train_score_count: usize,
}

pub fn require(path: &Path) -> Result<()> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::Dependency(path.to_path_buf()))
    }
}

pub fn read_text(path: &Path) -> Result<String> {
    require(path)?;
    fs::read_to_string(path).map_err(io_err(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(io_err(path))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = read_text(path)?;
    serde_json::from_str(&text).map_err(|e| CliError::Artifact {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

fn parse_error(path: &Path, line: usize, message: impl Into<String>) -> CliError {
    CliError::Artifact {
        path: path.to_path_buf(),
        message: format!("line {line}: {}", message.into()),
    }
}

/// Generic indexed-column CSV: `header` then `index,<v1>,<v2>,...` rows.
fn write_indexed_csv(path: &Path, header: &str, rows: impl Iterator<Item = String>) -> Result<()> {
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(&row);
        out.push('\n');
    }
    write_text(path, &out)
}

fn read_rows<'a>(
    path: &Path,
    text: &'a str,
    header: &str,
    fields: usize,
) -> Result<Vec<(usize, Vec<&'a str>)>> {
    let mut lines = text.split('\n');
    match lines.next() {
        Some(h) if h == header => {}
        other => {
            return Err(CliError::Artifact {
                path: path.to_path_buf(),
                message: format!("expected header '{header}', got {other:?}"),
            })
        }
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != fields {
            return Err(parse_error(
                path,
                i + 2,
                format!("expected {fields} fields, got {}", parts.len()),
            ));
        }
        let idx: usize = parts[0]
            .parse()
            .map_err(|e| parse_error(path, i + 2, format!("bad index: {e}")))?;
        rows.push((idx, parts[1..].to_vec()));
    }
    Ok(rows)
}

fn parse_f64(path: &Path, line: usize, raw: &str) -> Result<f64> {
    raw.parse()
        .map_err(|e| parse_error(path, line, format!("bad number '{raw}': {e}")))
}

fn parse_flag(path: &Path, line: usize, raw: &str) -> Result<bool> {
    match raw {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(parse_error(path, line, format!("bad flag '{other}'"))),
    }
}

// preprocessed.csv: index,raw,value

pub fn write_preprocessed(dir: &Path, raw: &[f64], value: &[f64]) -> Result<()> {
    write_indexed_csv(
        &dir.join(PREPROCESSED_CSV),
        "index,raw,value",
        raw.iter()
            .zip(value.iter())
            .enumerate()
            .map(|(i, (r, v))| format!("{i},{r},{v}")),
    )
}

pub fn read_preprocessed(dir: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let path = dir.join(PREPROCESSED_CSV);
    let text = read_text(&path)?;
    let rows = read_rows(&path, &text, "index,raw,value", 3)?;
    let mut raw = Vec::with_capacity(rows.len());
    let mut value = Vec::with_capacity(rows.len());
    for (line_off, (_, fields)) in rows.iter().enumerate() {
        raw.push(parse_f64(&path, line_off + 2, fields[0])?);
        value.push(parse_f64(&path, line_off + 2, fields[1])?);
    }
    Ok((raw, value))
}

// injected.csv: index,value

pub fn write_injected(dir: &Path, series: &[f64]) -> Result<()> {
    write_indexed_csv(
        &dir.join(INJECTED_CSV),
        "index,value",
        series.iter().enumerate().map(|(i, v)| format!("{i},{v}")),
    )
}

pub fn read_injected(dir: &Path) -> Result<Vec<f64>> {
    let path = dir.join(INJECTED_CSV);
    let text = read_text(&path)?;
    let rows = read_rows(&path, &text, "index,value", 2)?;
    rows.iter()
        .enumerate()
        .map(|(off, (_, fields))| parse_f64(&path, off + 2, fields[0]))
        .collect()
}

// mask.csv: index,flag  (+ episodes.json sidecar)

pub fn write_mask(dir: &Path, flags: &[bool], episodes: &[Episode]) -> Result<()> {
    write_indexed_csv(
        &dir.join(MASK_CSV),
        "index,flag",
        flags
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{i},{}", *f as u8)),
    )?;
    #[derive(Serialize)]
    struct Sidecar<'a> {
        episodes: &'a [Episode],
    }
    write_json(&dir.join(EPISODES_JSON), &Sidecar { episodes })
}

pub fn read_mask(dir: &Path) -> Result<Vec<bool>> {
    let path = dir.join(MASK_CSV);
    let text = read_text(&path)?;
    let rows = read_rows(&path, &text, "index,flag", 2)?;
    rows.iter()
        .enumerate()
        .map(|(off, (_, fields))| parse_flag(&path, off + 2, fields[0]))
        .collect()
}

pub fn read_episodes(dir: &Path) -> Result<Vec<Episode>> {
    #[derive(Deserialize)]
    struct Sidecar {
        episodes: Vec<Episode>,
    }
    let sidecar: Sidecar = read_json(&dir.join(EPISODES_JSON))?;
    Ok(sidecar.episodes)
}

// loss_history.csv: epoch,train_mse,val_mse

pub fn write_loss_history(dir: &Path, history: &[EpochLoss]) -> Result<()> {
    write_indexed_csv(
        &dir.join(LOSS_HISTORY_CSV),
        "epoch,train_mse,val_mse",
        history.iter().enumerate().map(|(i, e)| {
            let val = e.val_mse.map(|v| v.to_string()).unwrap_or_default();
            format!("{i},{},{val}", e.train_mse)
        }),
    )
}

// scores.csv: index,score,flag — index is the series index the score aligns to

pub fn write_scores(dir: &Path, window_offset: usize, scores: &[f64], flags: &[bool]) -> Result<()> {
    write_indexed_csv(
        &dir.join(SCORES_CSV),
        "index,score,flag",
        scores
            .iter()
            .zip(flags.iter())
            .enumerate()
            .map(|(i, (s, f))| format!("{},{s},{}", i + window_offset, *f as u8)),
    )
}

/// Returns (first series index, scores, flags).
pub fn read_scores(dir: &Path) -> Result<(usize, Vec<f64>, Vec<bool>)> {
    let path = dir.join(SCORES_CSV);
    let text = read_text(&path)?;
    let rows = read_rows(&path, &text, "index,score,flag", 3)?;
    let first = rows.first().map(|(i, _)| *i).unwrap_or(0);
    let mut scores = Vec::with_capacity(rows.len());
    let mut flags = Vec::with_capacity(rows.len());
    for (off, (_, fields)) in rows.iter().enumerate() {
        scores.push(parse_f64(&path, off + 2, fields[0])?);
        flags.push(parse_flag(&path, off + 2, fields[1])?);
    }
    Ok((first, scores, flags))
}

// baseline.csv: index,flag over the full injected series

pub fn write_baseline(dir: &Path, flags: &[bool]) -> Result<()> {
    write_indexed_csv(
        &dir.join(BASELINE_CSV),
        "index,flag",
        flags
            .iter()
            .enumerate()
            .map(|(i, f)| format!("{i},{}", *f as u8)),
    )
}

pub fn read_baseline(dir: &Path) -> Result<Vec<bool>> {
    let path = dir.join(BASELINE_CSV);
    let text = read_text(&path)?;
    let rows = read_rows(&path, &text, "index,flag", 2)?;
    rows.iter()
        .enumerate()
        .map(|(off, (_, fields))| parse_flag(&path, off + 2, fields[0]))
        .collect()
}

pub fn dataset_path(dir: &Path) -> PathBuf {
    dir.join(DATASET_CSV)
}
