//! False-data-injection simulation: additive Gaussian noise bursts with
//! ground-truth labels.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pmu_data::{ChannelSelector, PmuDataset};

/// Episode bounds in seconds; at 30 Hz these are 30 to 60 samples.
pub const EPISODE_MIN_S: f64 = 1.0;
pub const EPISODE_MAX_S: f64 = 2.0;

/// Injected anomalies stay a vast minority of the data: placement fails when
/// the drawn episodes would cover more than this fraction of the series.
pub const MAX_INJECTED_FRACTION: f64 = 0.05;

/// Half-open index interval of one injected burst.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Episode {
    pub start: usize,
    pub end: usize,
}

impl Episode {
    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end == self.start
    }
}

/// Ground truth for injected anomalies: per-sample flags plus the episode
/// intervals that produced them (disjoint, sorted).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyMask {
    pub flags: Vec<bool>,
    pub episodes: Vec<Episode>,
}

impl AnomalyMask {
    pub fn empty(len: usize) -> Self {
        AnomalyMask {
            flags: vec![false; len],
            episodes: Vec::new(),
        }
    }

    pub fn injected_samples(&self) -> usize {
        self.episodes.iter().map(|e| e.len()).sum()
    }
}

/// Robust noise-floor estimate: the median absolute deviation of the
/// first-differenced series.
pub fn estimate_noise_floor(series: &[f64]) -> f64 {
    if series.len() < 2 {
        return 0.0;
    }
    let diffs: Vec<f64> = series.windows(2).map(|w| w[1] - w[0]).collect();
    mad(&diffs)
}

fn median(values: &mut [f64]) -> f64 {
    let n = values.len();
    let (_, mid, _) = values.select_nth_unstable_by(n / 2, |a, b| a.total_cmp(b));
    let mid = *mid;
    if n % 2 == 1 {
        mid
    } else {
        let (_, lower, _) = values.select_nth_unstable_by(n / 2 - 1, |a, b| a.total_cmp(b));
        (mid + *lower) / 2.0
    }
}

/// Median absolute deviation around the median.
pub fn mad(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut buf = values.to_vec();
    let med = median(&mut buf);
    let mut dev: Vec<f64> = values.iter().map(|v| (v - med).abs()).collect();
    median(&mut dev)
}

/// Adds `count` disjoint Gaussian noise bursts to a copy of `series`. Episode
/// lengths are uniform over one to two seconds at `sample_rate`; start
/// positions are uniform over the placements that keep episodes disjoint.
/// Everything is a pure function of the seed.
pub fn inject_gaussian_series(
    series: &[f64],
    count: usize,
    sigma: f64,
    sample_rate: f64,
    seed: u64,
) -> Result<(Vec<f64>, AnomalyMask)> {
    if sigma < 0.0 {
        return Err(Error::Parameter(format!("sigma must be >= 0, got {sigma}")));
    }
    if sample_rate <= 0.0 {
        return Err(Error::Parameter(format!(
            "sample_rate must be positive, got {sample_rate}"
        )));
    }
    let mut injected = series.to_vec();
    let mut mask = AnomalyMask::empty(series.len());
    if count == 0 {
        return Ok((injected, mask));
    }

    let min_len = (EPISODE_MIN_S * sample_rate).round() as usize;
    let max_len = (EPISODE_MAX_S * sample_rate).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let lengths: Vec<usize> = (0..count).map(|_| rng.gen_range(min_len..=max_len)).collect();
    let total: usize = lengths.iter().sum();
    let budget = (series.len() as f64 * MAX_INJECTED_FRACTION).floor() as usize;
    if total > budget {
        return Err(Error::Placement(format!(
            "{count} episodes totalling {total} samples exceed {:.0}% of a {}-sample series",
            MAX_INJECTED_FRACTION * 100.0,
            series.len()
        )));
    }

    let mut episodes: Vec<Episode> = Vec::with_capacity(count);
    for len in lengths {
        if len > series.len() {
            return Err(Error::Placement(format!(
                "episode of {len} samples cannot fit a {}-sample series",
                series.len()
            )));
        }
        let candidates: Vec<usize> = (0..=series.len() - len)
            .filter(|&s| {
                episodes
                    .iter()
                    .all(|e| s + len <= e.start || s >= e.end)
            })
            .collect();
        if candidates.is_empty() {
            return Err(Error::Placement(format!(
                "no disjoint placement left for a {len}-sample episode"
            )));
        }
        let start = candidates[rng.gen_range(0..candidates.len())];
        episodes.push(Episode {
            start,
            end: start + len,
        });
    }
    episodes.sort_by_key(|e| e.start);

    let noise = Normal::new(0.0, sigma).expect("validated sigma");
    for e in &episodes {
        for i in e.start..e.end {
            injected[i] += noise.sample(&mut rng);
            mask.flags[i] = true;
        }
    }
    mask.episodes = episodes;
    Ok((injected, mask))
}

/// Dataset-level injection into exactly one channel; the other channels are
/// untouched. Multi-channel attacks compose by repeated calls.
pub fn inject_gaussian(
    dataset: &PmuDataset,
    selector: &ChannelSelector,
    count: usize,
    sigma: f64,
    seed: u64,
) -> Result<(PmuDataset, AnomalyMask)> {
    let channel = dataset.select(selector).ok_or_else(|| {
        Error::Parameter(format!(
            "channel {}/{} not present in dataset",
            selector.station, selector.kind
        ))
    })?;
    let (values, mask) =
        inject_gaussian_series(&channel.values, count, sigma, channel.sample_rate, seed)?;
    let mut out = dataset.clone();
    for ch in &mut out.channels {
        if ch.station_id == selector.station && ch.kind == selector.kind {
            ch.values = values;
            break;
        }
    }
    Ok((out, mask))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_series(n: usize) -> Vec<f64> {
        vec![1.0; n]
    }

    #[test]
    fn count_zero_is_a_no_op() {
        let s = flat_series(100);
        let (out, mask) = inject_gaussian_series(&s, 0, 1.0, 30.0, 5).unwrap();
        assert_eq!(out, s);
        assert!(mask.episodes.is_empty());
        assert!(mask.flags.iter().all(|f| !f));
    }

    #[test]
    fn episode_length_is_one_to_two_seconds() {
        let s = flat_series(3000);
        let (_, mask) = inject_gaussian_series(&s, 1, 0.5, 30.0, 42).unwrap();
        assert_eq!(mask.episodes.len(), 1);
        let len = mask.episodes[0].len();
        assert!((30..=60).contains(&len), "episode length {len}");
    }

    #[test]
    fn determinism_given_seed() {
        let s: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.01).sin()).collect();
        let a = inject_gaussian_series(&s, 3, 0.7, 30.0, 99).unwrap();
        let b = inject_gaussian_series(&s, 3, 0.7, 30.0, 99).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn flags_cover_exactly_the_modified_samples() {
        let s = flat_series(5000);
        let (out, mask) = inject_gaussian_series(&s, 4, 2.0, 30.0, 7).unwrap();
        for (i, (a, b)) in s.iter().zip(out.iter()).enumerate() {
            if a != b {
                assert!(mask.flags[i], "modified sample {i} not flagged");
            }
            if !mask.flags[i] {
                assert_eq!(a, b, "unflagged sample {i} changed");
            }
        }
    }

    #[test]
    fn episodes_are_disjoint_and_sorted() {
        let s = flat_series(10_000);
        let (_, mask) = inject_gaussian_series(&s, 8, 1.0, 30.0, 3).unwrap();
        assert_eq!(mask.episodes.len(), 8);
        for pair in mask.episodes.windows(2) {
            assert!(pair[0].end <= pair[1].start);
        }
    }

    #[test]
    fn budget_violation_is_a_placement_error() {
        // 300 samples: even one 30-sample episode is 10% > 5%.
        let s = flat_series(300);
        let err = inject_gaussian_series(&s, 1, 1.0, 30.0, 1).unwrap_err();
        assert!(matches!(err, Error::Placement(_)));
    }

    #[test]
    fn missing_channel_is_a_parameter_error() {
        use crate::pmu_data::{generate_synthetic, ChannelKind, SynthConfig};
        let d = generate_synthetic(&SynthConfig {
            amplitude_peak: 10.0,
            nominal_frequency_hz: 60.0,
            initial_phase_deg: 0.0,
            duration_s: 60.0,
            noise_floor_sigma: 0.0,
            seed: 0,
            load_steps: vec![],
        })
        .unwrap();
        let err = inject_gaussian(
            &d,
            &ChannelSelector {
                station: "S9".into(),
                kind: ChannelKind::Frequency,
            },
            1,
            1.0,
            1,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parameter(_)));
    }

    #[test]
    fn injected_variance_tracks_sigma() {
        // Mean within-episode variance over many seeds approaches
        // baseline + sigma^2; the baseline here is 0 (flat series).
        let s = flat_series(6000);
        let sigma = 2.5;
        let mut total_var = 0.0;
        let mut episodes = 0usize;
        for seed in 0..100 {
            let (out, mask) = inject_gaussian_series(&s, 1, sigma, 30.0, seed).unwrap();
            for e in &mask.episodes {
                let vals = &out[e.start..e.end];
                let mean = vals.iter().sum::<f64>() / vals.len() as f64;
                total_var +=
                    vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / vals.len() as f64;
                episodes += 1;
            }
        }
        let mean_var = total_var / episodes as f64;
        let expected = sigma * sigma;
        assert!(
            (mean_var - expected).abs() / expected < 0.2,
            "mean within-episode variance {mean_var}, expected about {expected}"
        );
    }

    #[test]
    fn noise_floor_estimator_tracks_gaussian_sigma() {
        use rand::SeedableRng;
        use rand_distr::Distribution;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let normal = Normal::new(0.0, 0.5).unwrap();
        let series: Vec<f64> = (0..20_000).map(|_| normal.sample(&mut rng)).collect();
        // MAD of the differenced signal is ~0.954 sigma for white noise.
        let floor = estimate_noise_floor(&series);
        assert!((floor - 0.477).abs() < 0.05, "floor {floor}");
    }
}
