//! PMU dataset types, integrity validation, synthetic generation, and CSV I/O.

mod csv;
mod synth;

pub use csv::{load_csv, load_csv_str, save_csv, save_csv_string};
pub use synth::{generate_synthetic, synth_phasor, wrap_angle_deg, LoadStep, SynthConfig};

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// Measured quantity carried by one channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ChannelKind {
    /// Volts (or per-unit, as supplied).
    VoltageMagnitude,
    /// Degrees, wrapped to (-180, 180] in stored form.
    VoltageAngle,
    /// Hertz.
    Frequency,
}

impl ChannelKind {
    pub const ALL: [ChannelKind; 3] = [
        ChannelKind::VoltageMagnitude,
        ChannelKind::VoltageAngle,
        ChannelKind::Frequency,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelKind::VoltageMagnitude => "voltage_magnitude",
            ChannelKind::VoltageAngle => "voltage_angle",
            ChannelKind::Frequency => "frequency",
        }
    }
}

impl fmt::Display for ChannelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ChannelKind {
    type Err = crate::error::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "voltage_magnitude" | "vmag" => Ok(ChannelKind::VoltageMagnitude),
            "voltage_angle" | "vangle" => Ok(ChannelKind::VoltageAngle),
            "frequency" | "freq" => Ok(ChannelKind::Frequency),
            other => Err(crate::error::Error::Parameter(format!(
                "unknown channel kind '{other}'"
            ))),
        }
    }
}

/// One measurement channel of one station.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmuChannel {
    pub station_id: String,
    pub kind: ChannelKind,
    pub values: Vec<f64>,
    /// Samples per second; every channel of a dataset shares the same rate.
    pub sample_rate: f64,
}

/// Multi-station table of uniformly sampled channels. The timestamp of index
/// `i` is `start_time + i / sample_rate`. `start_time` is kept at millisecond
/// resolution so the CSV form (which stores timestamps with three decimals)
/// round-trips losslessly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PmuDataset {
    pub channels: Vec<PmuChannel>,
    pub start_time: f64,
    pub station_count: usize,
}

/// Identifies one channel of one station.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChannelSelector {
    pub station: String,
    pub kind: ChannelKind,
}

impl PmuDataset {
    pub fn channel(&self, station: &str, kind: ChannelKind) -> Option<&PmuChannel> {
        self.channels
            .iter()
            .find(|c| c.station_id == station && c.kind == kind)
    }

    pub fn select(&self, selector: &ChannelSelector) -> Option<&PmuChannel> {
        self.channel(&selector.station, selector.kind)
    }

    pub fn len(&self) -> usize {
        self.channels.first().map(|c| c.values.len()).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn sample_rate(&self) -> f64 {
        self.channels.first().map(|c| c.sample_rate).unwrap_or(0.0)
    }

    /// Station ids in ascending order.
    pub fn stations(&self) -> Vec<&str> {
        let mut out: Vec<&str> = self
            .channels
            .iter()
            .map(|c| c.station_id.as_str())
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }
}

/// A single invariant violation found by [`validate`].
#[derive(Debug, Clone, PartialEq)]
pub struct Violation {
    pub station: Option<String>,
    pub kind: Option<ChannelKind>,
    pub index: Option<usize>,
    pub message: String,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let (Some(station), Some(kind)) = (&self.station, &self.kind) {
            write!(f, "[{station}/{kind}")?;
            if let Some(i) = self.index {
                write!(f, "@{i}")?;
            }
            write!(f, "] ")?;
        }
        f.write_str(&self.message)
    }
}

fn violation(
    station: Option<&str>,
    kind: Option<ChannelKind>,
    index: Option<usize>,
    message: impl Into<String>,
) -> Violation {
    Violation {
        station: station.map(|s| s.to_string()),
        kind,
        index,
        message: message.into(),
    }
}

/// Checks every dataset invariant; an empty result means the dataset is sound.
/// Violations are data, not errors.
pub fn validate(dataset: &PmuDataset) -> Vec<Violation> {
    let mut out = Vec::new();

    if dataset.station_count < 1 {
        out.push(violation(None, None, None, "station_count must be >= 1"));
    }
    if !dataset.start_time.is_finite() {
        out.push(violation(None, None, None, "start_time is not finite"));
    } else {
        let ms = dataset.start_time * 1000.0;
        if (ms - ms.round()).abs() > 1e-6 {
            out.push(violation(
                None,
                None,
                None,
                format!(
                    "start_time {} is not millisecond-aligned",
                    dataset.start_time
                ),
            ));
        }
    }

    let mut by_station: BTreeMap<&str, Vec<ChannelKind>> = BTreeMap::new();
    for ch in &dataset.channels {
        by_station.entry(&ch.station_id).or_default().push(ch.kind);
    }
    if by_station.len() != dataset.station_count {
        out.push(violation(
            None,
            None,
            None,
            format!(
                "station_count {} does not match {} distinct stations",
                dataset.station_count,
                by_station.len()
            ),
        ));
    }
    for (station, kinds) in &by_station {
        for kind in ChannelKind::ALL {
            let n = kinds.iter().filter(|k| **k == kind).count();
            if n != 1 {
                out.push(violation(
                    Some(station),
                    Some(kind),
                    None,
                    format!("station must contribute exactly one {kind} channel, found {n}"),
                ));
            }
        }
    }

    let first_len = dataset.channels.first().map(|c| c.values.len());
    let first_rate = dataset.channels.first().map(|c| c.sample_rate);
    for ch in &dataset.channels {
        if ch.sample_rate <= 0.0 || !ch.sample_rate.is_finite() {
            out.push(violation(
                Some(&ch.station_id),
                Some(ch.kind),
                None,
                format!("sample_rate must be positive, got {}", ch.sample_rate),
            ));
        }
        if Some(ch.values.len()) != first_len {
            out.push(violation(
                Some(&ch.station_id),
                Some(ch.kind),
                None,
                format!(
                    "channel length {} differs from {}",
                    ch.values.len(),
                    first_len.unwrap_or(0)
                ),
            ));
        }
        if Some(ch.sample_rate) != first_rate {
            out.push(violation(
                Some(&ch.station_id),
                Some(ch.kind),
                None,
                format!(
                    "sample_rate {} differs from {}",
                    ch.sample_rate,
                    first_rate.unwrap_or(0.0)
                ),
            ));
        }
        for (i, v) in ch.values.iter().enumerate() {
            if !v.is_finite() {
                out.push(violation(
                    Some(&ch.station_id),
                    Some(ch.kind),
                    Some(i),
                    "value is NaN or infinite",
                ));
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_dataset() -> PmuDataset {
        let mk = |kind, values: Vec<f64>| PmuChannel {
            station_id: "S1".into(),
            kind,
            values,
            sample_rate: 30.0,
        };
        PmuDataset {
            channels: vec![
                mk(ChannelKind::VoltageMagnitude, vec![1.0, 1.1]),
                mk(ChannelKind::VoltageAngle, vec![10.0, 11.0]),
                mk(ChannelKind::Frequency, vec![60.0, 60.0]),
            ],
            start_time: 0.0,
            station_count: 1,
        }
    }

    #[test]
    fn valid_dataset_has_no_violations() {
        assert!(validate(&tiny_dataset()).is_empty());
    }

    #[test]
    fn nan_is_reported_with_location() {
        let mut d = tiny_dataset();
        d.channels[1].values[1] = f64::NAN;
        let v = validate(&d);
        assert_eq!(v.len(), 1);
        assert_eq!(v[0].index, Some(1));
        assert_eq!(v[0].kind, Some(ChannelKind::VoltageAngle));
    }

    #[test]
    fn length_mismatch_is_reported() {
        let mut d = tiny_dataset();
        d.channels[2].values.push(60.0);
        let v = validate(&d);
        assert!(v.iter().any(|v| v.message.contains("length")));
    }

    #[test]
    fn missing_channel_kind_is_reported() {
        let mut d = tiny_dataset();
        d.channels.remove(2);
        let v = validate(&d);
        assert!(v.iter().any(|v| v.kind == Some(ChannelKind::Frequency)));
    }
}
