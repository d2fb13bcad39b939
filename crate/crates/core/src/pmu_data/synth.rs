//! Synthetic PMU stream generation from the phasor model.
//!
//! The generated signal is u(t) = U_m·cos(2πf·t + δ₀) observed by a PMU that
//! reports against the nearest standard grid frequency (50 or 60 Hz). The
//! reported phasor magnitude is the RMS value U_m/√2, and the reported angle
//! drifts at the off-nominal rate 360·(f − f_ref) degrees per second.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::{ChannelKind, PmuChannel, PmuDataset};

/// PMU reporting rate of the modeled network, in samples per second.
pub const SAMPLE_RATE_HZ: f64 = 30.0;

const SQRT_2: f64 = std::f64::consts::SQRT_2;

/// An instantaneous magnitude offset applied from `time_s` onward, modeling a
/// step load change.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadStep {
    pub time_s: f64,
    pub magnitude_delta: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    /// Peak sinusoid amplitude U_m, volts.
    pub amplitude_peak: f64,
    /// Signal frequency f, hertz.
    pub nominal_frequency_hz: f64,
    /// Initial phase angle δ₀, degrees.
    pub initial_phase_deg: f64,
    pub duration_s: f64,
    /// Standard deviation of the additive measurement noise, in the units of
    /// each target channel.
    pub noise_floor_sigma: f64,
    pub seed: u64,
    #[serde(default)]
    pub load_steps: Vec<LoadStep>,
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.duration_s > 0.0) {
            return Err(Error::Parameter(format!(
                "duration_s must be positive, got {}",
                self.duration_s
            )));
        }
        if !(self.noise_floor_sigma >= 0.0) {
            return Err(Error::Parameter(format!(
                "noise_floor_sigma must be >= 0, got {}",
                self.noise_floor_sigma
            )));
        }
        Ok(())
    }

    /// Grid reference frequency the PMU reports against: whichever of 50 and
    /// 60 Hz is closer to the configured signal frequency.
    pub fn reference_frequency_hz(&self) -> f64 {
        let f = self.nominal_frequency_hz;
        if (f - 50.0).abs() <= (f - 60.0).abs() {
            50.0
        } else {
            60.0
        }
    }

    /// Reported phasor angle at time `t`, degrees, not wrapped.
    pub fn angle_deg_at(&self, t: f64) -> f64 {
        self.initial_phase_deg + 360.0 * (self.nominal_frequency_hz - self.reference_frequency_hz()) * t
    }
}

/// Wraps an angle in degrees to the conventional PMU range (-180, 180].
pub fn wrap_angle_deg(angle: f64) -> f64 {
    let r = angle.rem_euclid(360.0);
    if r > 180.0 {
        r - 360.0
    } else {
        r
    }
}

/// Synchrophasor at time `t` as a (re, im) pair:
/// U = (U_m/√2)·(cos δ(t) + j·sin δ(t)).
pub fn synth_phasor(config: &SynthConfig, t: f64) -> (f64, f64) {
    let rms = config.amplitude_peak / SQRT_2;
    let delta_rad = config.angle_deg_at(t).to_radians();
    (rms * delta_rad.cos(), rms * delta_rad.sin())
}

/// Generates a single-station 30 Hz dataset. The angle channel is stored
/// wrapped to (-180, 180] to mirror real PMU output; generation is a pure
/// function of the configuration.
pub fn generate_synthetic(config: &SynthConfig) -> Result<PmuDataset> {
    config.validate()?;
    let n = ((config.duration_s * SAMPLE_RATE_HZ).round() as usize).max(1);
    let rms = config.amplitude_peak / SQRT_2;

    let mut noise_rngs: Vec<ChaCha8Rng> = (0..3)
        .map(|stream| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
            rng.set_stream(stream);
            rng
        })
        .collect();
    let noise = if config.noise_floor_sigma > 0.0 {
        Some(Normal::new(0.0, config.noise_floor_sigma).expect("validated sigma"))
    } else {
        None
    };
    let draw = |idx: usize, rngs: &mut Vec<ChaCha8Rng>| -> f64 {
        match &noise {
            Some(dist) => dist.sample(&mut rngs[idx]),
            None => 0.0,
        }
    };

    let mut steps = config.load_steps.clone();
    steps.sort_by(|a, b| a.time_s.total_cmp(&b.time_s));

    let mut magnitude = Vec::with_capacity(n);
    let mut angle = Vec::with_capacity(n);
    let mut frequency = Vec::with_capacity(n);
    let mut step_offset = 0.0;
    let mut next_step = 0usize;
    for i in 0..n {
        let t = i as f64 / SAMPLE_RATE_HZ;
        while next_step < steps.len() && steps[next_step].time_s <= t {
            step_offset += steps[next_step].magnitude_delta;
            next_step += 1;
        }
        magnitude.push(rms + step_offset + draw(0, &mut noise_rngs));
        angle.push(wrap_angle_deg(config.angle_deg_at(t) + draw(1, &mut noise_rngs)));
        frequency.push(config.nominal_frequency_hz + draw(2, &mut noise_rngs));
    }

    let mk = |kind, values| PmuChannel {
        station_id: "S1".to_string(),
        kind,
        values,
        sample_rate: SAMPLE_RATE_HZ,
    };
    Ok(PmuDataset {
        channels: vec![
            mk(ChannelKind::VoltageMagnitude, magnitude),
            mk(ChannelKind::VoltageAngle, angle),
            mk(ChannelKind::Frequency, frequency),
        ],
        start_time: 0.0,
        station_count: 1,
    })
}
