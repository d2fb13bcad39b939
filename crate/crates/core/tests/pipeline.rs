//! Cross-module flows: model serialization round trips, end-to-end detection
//! with the statistical baseline, and a comparative grid search.

use pmu_sentinel::detect::statistical_baseline;
use pmu_sentinel::inject::{estimate_noise_floor, inject_gaussian_series};
use pmu_sentinel::models::{
    build, grid_search, train, ModelName, SearchSpace, TrainConfig, TrainedModel,
};
use pmu_sentinel::pmu_data::{generate_synthetic, ChannelKind, LoadStep, SynthConfig};
use pmu_sentinel::preprocess::{make_windows, median_filter};

fn noisy_magnitude(duration_s: f64, sigma: f64, seed: u64) -> Vec<f64> {
    let dataset = generate_synthetic(&SynthConfig {
        amplitude_peak: 325.0,
        nominal_frequency_hz: 60.02,
        initial_phase_deg: 20.0,
        duration_s,
        noise_floor_sigma: sigma,
        seed,
        load_steps: vec![
            LoadStep {
                time_s: duration_s * 0.3,
                magnitude_delta: -2.5,
            },
            LoadStep {
                time_s: duration_s * 0.7,
                magnitude_delta: 1.8,
            },
        ],
    })
    .unwrap();
    dataset
        .channel("S1", ChannelKind::VoltageMagnitude)
        .unwrap()
        .values
        .clone()
}

#[test]
fn trained_model_round_trip_is_bit_exact() {
    let series: Vec<f64> = (0..200).map(|i| 0.5 + 0.3 * (i as f64 * 0.21).sin()).collect();
    let windows = make_windows(&series, 10, 1).unwrap();
    let spec = build(ModelName::Lstm);
    let config = TrainConfig {
        epochs: 2,
        batch_size: 16,
        learning_rate: 1e-3,
        seed: 8,
        early_stop_patience: None,
    };
    let (net, _) = train(&spec, &windows, &config).unwrap();

    let model = TrainedModel::from_network(&spec, 10, 1, &net);
    let json = model.to_json().unwrap();
    let restored = TrainedModel::from_json(&json).unwrap();
    assert_eq!(model, restored);

    let mut original = net.clone();
    let mut reloaded = restored.to_network().unwrap();
    for i in 0..windows.len() {
        let (x, _) = windows.sample(i);
        let a = original.predict_scalar(&x).unwrap();
        let b = reloaded.predict_scalar(&x).unwrap();
        assert_eq!(a.to_bits(), b.to_bits(), "prediction {i} differs");
    }
}

#[test]
fn baseline_catches_injected_bursts_end_to_end() {
    // Filtered synthetic data, bursts at 5x the raw noise floor, z = 4.
    let raw = noisy_magnitude(120.0, 0.5, 33);
    let filtered = median_filter(&raw, 15).unwrap();
    let sigma = 5.0 * estimate_noise_floor(&raw);
    let (injected, mask) = inject_gaussian_series(&filtered, 3, sigma, 30.0, 77).unwrap();

    let flags = statistical_baseline(&injected, 15, 4.0).unwrap();
    let injected_total = mask.flags.iter().filter(|f| **f).count();
    let caught = mask
        .flags
        .iter()
        .zip(flags.iter())
        .filter(|(m, f)| **m && **f)
        .count();
    let fraction = caught as f64 / injected_total as f64;
    assert!(
        fraction >= 0.8,
        "baseline flagged only {fraction:.3} of injected timesteps"
    );
}

#[test]
fn grid_search_prefers_capacity_over_one_unit() {
    // Clean sinusoid: the reference-scale hidden width must beat 1 unit.
    let series: Vec<f64> = (0..360)
        .map(|i| 0.5 + 0.35 * (i as f64 * 0.17).sin())
        .collect();
    let train_w = make_windows(&series[..300], 10, 1).unwrap();
    let val_w = make_windows(&series[300..], 10, 1).unwrap();
    let space = SearchSpace {
        filters: vec![4],
        kernel_sizes: vec![3],
        hidden_units: vec![64, 1],
        dropout_rates: vec![0.12],
        learning_rates: vec![1e-2],
    };
    let base = TrainConfig {
        epochs: 6,
        batch_size: 16,
        learning_rate: 1e-2,
        seed: 15,
        early_stop_patience: None,
    };
    let ranked = grid_search(ModelName::Lstm, &space, &train_w, &val_w, 8, &base, 1).unwrap();
    assert_eq!(ranked.len(), 2);
    assert_eq!(
        ranked[0].candidate.hidden_units, 64,
        "val mse ranking: {:?}",
        ranked
            .iter()
            .map(|r| (r.candidate.hidden_units, r.val_mse))
            .collect::<Vec<_>>()
    );
}
