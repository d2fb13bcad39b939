//! Flat CSV form of a [`PmuDataset`].
//!
//! Schema: header `timestamp,station,vmag,vangle,freq`; one row per
//! (timestamp, station); rows sorted by timestamp then station; timestamps in
//! seconds since epoch with exactly three decimals; `\n` line endings. Values
//! are written with the shortest representation that parses back to the same
//! f64, so a save/load round trip is lossless.
//!
//! The sample rate is not stored; loading infers the nearest integer rate
//! from the timestamp span (single-sample files fall back to 30 Hz).

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{validate, ChannelKind, PmuChannel, PmuDataset};

const HEADER: &str = "timestamp,station,vmag,vangle,freq";
const COLUMNS: [&str; 5] = ["timestamp", "station", "vmag", "vangle", "freq"];

/// Timestamps are stored with millisecond precision; allow rounding slack
/// when checking the uniform grid on load.
const GRID_TOLERANCE_S: f64 = 2e-3;

pub fn save_csv(dataset: &PmuDataset, path: &Path) -> Result<()> {
    let text = save_csv_string(dataset)?;
    fs::write(path, text)?;
    Ok(())
}

pub fn save_csv_string(dataset: &PmuDataset) -> Result<String> {
    let violations = validate(dataset);
    if let Some(first) = violations.first() {
        return Err(Error::Integrity(format!(
            "refusing to save invalid dataset: {first}"
        )));
    }
    let stations = dataset.stations();
    for station in &stations {
        if station.is_empty() || station.contains(',') || station.contains('\n') {
            return Err(Error::Integrity(format!(
                "station id {station:?} cannot be stored in CSV"
            )));
        }
    }
    let n = dataset.len();
    let rate = dataset.sample_rate();
    let mut out = String::with_capacity(n * stations.len() * 40 + HEADER.len() + 1);
    out.push_str(HEADER);
    out.push('\n');
    for i in 0..n {
        let t = dataset.start_time + i as f64 / rate;
        for station in &stations {
            let vmag = &dataset
                .channel(station, ChannelKind::VoltageMagnitude)
                .expect("validated")
                .values[i];
            let vangle = &dataset
                .channel(station, ChannelKind::VoltageAngle)
                .expect("validated")
                .values[i];
            let freq = &dataset
                .channel(station, ChannelKind::Frequency)
                .expect("validated")
                .values[i];
            out.push_str(&format!("{t:.3},{station},{vmag},{vangle},{freq}\n"));
        }
    }
    Ok(out)
}

pub fn load_csv(path: &Path) -> Result<PmuDataset> {
    let text = fs::read_to_string(path)?;
    load_csv_str(&text)
}

pub fn load_csv_str(text: &str) -> Result<PmuDataset> {
    let mut lines = text.split('\n');
    let header = lines
        .next()
        .ok_or_else(|| Error::Schema("empty file".into()))?;
    if header.trim_end_matches('\r') != HEADER {
        return Err(Error::Schema(format!(
            "header must be '{HEADER}', got '{header}'"
        )));
    }

    struct Row {
        timestamp: f64,
        station: String,
        values: [f64; 3],
    }

    let mut rows: Vec<Row> = Vec::new();
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2; // 1-based, after the header
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Schema(format!(
                "row {line_no}: expected 5 fields, got {}",
                fields.len()
            )));
        }
        let mut numeric = [0.0f64; 4]; // timestamp, vmag, vangle, freq
        for (slot, &field_idx) in [0usize, 2, 3, 4].iter().enumerate() {
            let raw = fields[field_idx];
            if raw.is_empty() {
                return Err(Error::Integrity(format!(
                    "missing value at row {line_no}, column {}",
                    COLUMNS[field_idx]
                )));
            }
            numeric[slot] = raw.parse::<f64>().map_err(|e| Error::Parse {
                row: line_no,
                column: COLUMNS[field_idx].to_string(),
                message: e.to_string(),
            })?;
            if !numeric[slot].is_finite() {
                return Err(Error::Integrity(format!(
                    "non-finite value at row {line_no}, column {}",
                    COLUMNS[field_idx]
                )));
            }
        }
        if fields[1].is_empty() {
            return Err(Error::Integrity(format!(
                "missing value at row {line_no}, column station"
            )));
        }
        rows.push(Row {
            timestamp: numeric[0],
            station: fields[1].to_string(),
            values: [numeric[1], numeric[2], numeric[3]],
        });
    }
    if rows.is_empty() {
        return Err(Error::Schema("file has a header but no rows".into()));
    }

    // Group rows into per-timestamp blocks; the schema demands sorted order.
    let mut blocks: Vec<(f64, Vec<usize>)> = Vec::new();
    for (i, row) in rows.iter().enumerate() {
        match blocks.last_mut() {
            Some((t, members)) if *t == row.timestamp => members.push(i),
            Some((t, _)) if row.timestamp < *t => {
                return Err(Error::Schema(format!(
                    "rows are not sorted by timestamp near t={}",
                    row.timestamp
                )));
            }
            _ => blocks.push((row.timestamp, vec![i])),
        }
    }

    let stations: Vec<String> = blocks[0].1.iter().map(|&i| rows[i].station.clone()).collect();
    for w in stations.windows(2) {
        if w[1] <= w[0] {
            return Err(Error::Schema(format!(
                "stations are not strictly ascending within a timestamp block ({} then {})",
                w[0], w[1]
            )));
        }
    }
    for (t, members) in &blocks {
        let got: Vec<&str> = members.iter().map(|&i| rows[i].station.as_str()).collect();
        if got.len() != stations.len() || got.iter().zip(&stations).any(|(a, b)| *a != b) {
            return Err(Error::Integrity(format!(
                "timestamp {t} does not carry exactly one row per station"
            )));
        }
    }

    let n = blocks.len();
    let start_time = blocks[0].0;
    let sample_rate = if n >= 2 {
        let span = blocks[n - 1].0 - start_time;
        if span <= 0.0 {
            return Err(Error::Integrity("timestamps do not advance".into()));
        }
        ((n - 1) as f64 / span).round().max(1.0)
    } else {
        30.0
    };
    for (i, (t, _)) in blocks.iter().enumerate() {
        let expected = start_time + i as f64 / sample_rate;
        if (t - expected).abs() > GRID_TOLERANCE_S {
            return Err(Error::Integrity(format!(
                "non-uniform timestamp grid at t={t} (expected {expected:.3} at {sample_rate} Hz)"
            )));
        }
    }

    let mut channels = Vec::with_capacity(stations.len() * 3);
    for (s_idx, station) in stations.iter().enumerate() {
        let mut series: [Vec<f64>; 3] = [
            Vec::with_capacity(n),
            Vec::with_capacity(n),
            Vec::with_capacity(n),
        ];
        for (_, members) in &blocks {
            let row = &rows[members[s_idx]];
            for k in 0..3 {
                series[k].push(row.values[k]);
            }
        }
        let [vmag, vangle, freq] = series;
        for (kind, values) in [
            (ChannelKind::VoltageMagnitude, vmag),
            (ChannelKind::VoltageAngle, vangle),
            (ChannelKind::Frequency, freq),
        ] {
            channels.push(PmuChannel {
                station_id: station.clone(),
                kind,
                values,
                sample_rate,
            });
        }
    }
    Ok(PmuDataset {
        channels,
        start_time,
        station_count: stations.len(),
    })
}
