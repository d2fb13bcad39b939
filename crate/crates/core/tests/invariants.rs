//! Property tests for the spec-level invariants, each checked against an
//! independent oracle where one exists.

use proptest::prelude::*;

use pmu_sentinel::detect::apply_threshold;
use pmu_sentinel::evaluate::{confusion, f1, precision, recall, ConfusionCounts};
use pmu_sentinel::inject::inject_gaussian_series;
use pmu_sentinel::pmu_data::{
    load_csv_str, save_csv_string, wrap_angle_deg, ChannelKind, PmuChannel, PmuDataset,
};
use pmu_sentinel::preprocess::{make_windows, median_filter, unwrap_angles, ScalerParams};

/// Brute-force median with replicate padding: materialize the padded window,
/// fully sort it, take the middle element.
fn median_oracle(series: &[f64], order: usize) -> Vec<f64> {
    let half = (order / 2) as isize;
    let n = series.len() as isize;
    (0..n)
        .map(|i| {
            let mut window: Vec<f64> = (i - half..=i + half)
                .map(|j| series[j.clamp(0, n - 1) as usize])
                .collect();
            window.sort_by(|a, b| a.partial_cmp(b).unwrap());
            window[order / 2]
        })
        .collect()
}

fn series_strategy(max_len: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1e3f64..1e3, 3..max_len)
}

proptest! {
    #[test]
    fn median_filter_matches_brute_force(series in series_strategy(120), order_idx in 0usize..5) {
        let orders = [1usize, 3, 5, 7, 9];
        let order = orders[order_idx];
        prop_assume!(order <= series.len());
        let ours = median_filter(&series, order).unwrap();
        let oracle = median_oracle(&series, order);
        prop_assert_eq!(ours, oracle);
    }

    #[test]
    fn median_filter_idempotent_on_step_signals(
        levels in prop::collection::vec(-100f64..100.0, 2..8),
        lens in prop::collection::vec(2usize..12, 2..8),
    ) {
        // Plateaus of at least two samples: monotone-segment fixed point.
        let series: Vec<f64> = levels
            .iter()
            .zip(lens.iter())
            .flat_map(|(v, l)| std::iter::repeat(*v).take(*l))
            .collect();
        prop_assume!(series.len() >= 3);
        let once = median_filter(&series, 3).unwrap();
        let twice = median_filter(&once, 3).unwrap();
        prop_assert_eq!(once, twice);
    }

    #[test]
    fn unwrap_bounded_steps_and_congruence(raw in prop::collection::vec(-4000f64..4000.0, 1..200)) {
        let wrapped: Vec<f64> = raw.iter().map(|a| wrap_angle_deg(*a)).collect();
        let unwrapped = unwrap_angles(&wrapped);
        prop_assert_eq!(unwrapped.len(), wrapped.len());
        prop_assert_eq!(unwrapped[0], wrapped[0]);
        for pair in unwrapped.windows(2) {
            prop_assert!((pair[1] - pair[0]).abs() <= 180.0 + 1e-9);
        }
        for (u, w) in unwrapped.iter().zip(wrapped.iter()) {
            let k = (u - w) / 360.0;
            prop_assert!((k - k.round()).abs() < 1e-9, "u={} w={}", u, w);
        }
    }

    #[test]
    fn scaler_round_trip_identity(series in prop::collection::vec(-1e6f64..1e6, 2..100)) {
        let params = ScalerParams::fit_single(&series).unwrap();
        let scaled = params.apply(0, &series);
        let back = params.invert(0, &scaled);
        let span = (params.max[0] - params.min[0]).max(1.0);
        for (orig, rec) in series.iter().zip(back.iter()) {
            prop_assert!((orig - rec).abs() <= 1e-12 * span);
        }
        // Training-range values always land in [0, 1].
        for v in &scaled {
            prop_assert!((-1e-12..=1.0 + 1e-12).contains(v));
        }
    }

    #[test]
    fn window_count_matches_enumeration(
        len in 3usize..200,
        window_len in 1usize..20,
        horizon in 1usize..5,
    ) {
        prop_assume!(len >= window_len + horizon);
        let series: Vec<f64> = (0..len).map(|i| i as f64).collect();
        let set = make_windows(&series, window_len, horizon).unwrap();
        // Enumeration oracle: count the start positions whose window and
        // target both fit.
        let expected = (0..len)
            .filter(|start| start + window_len + horizon - 1 < len)
            .count();
        prop_assert_eq!(set.len(), expected);
        // Each window is the contiguous slice starting at its index.
        for i in 0..set.len() {
            let (x, y) = set.sample(i);
            prop_assert_eq!(x.data(), &series[i..i + window_len]);
            prop_assert_eq!(y, series[i + window_len + horizon - 1]);
        }
    }

    #[test]
    fn injection_flags_match_episodes(seed in 0u64..500) {
        let series: Vec<f64> = (0..4000).map(|i| (i as f64 * 0.05).sin()).collect();
        let (out, mask) = inject_gaussian_series(&series, 3, 1.0, 30.0, seed).unwrap();
        // flags[i] holds exactly when i belongs to some episode
        for (i, flag) in mask.flags.iter().enumerate() {
            let inside = mask.episodes.iter().any(|e| i >= e.start && i < e.end);
            prop_assert_eq!(*flag, inside);
        }
        // changed samples are always flagged
        for i in 0..series.len() {
            if out[i] != series[i] {
                prop_assert!(mask.flags[i]);
            }
        }
        // injected span stays a vast minority
        prop_assert!(mask.injected_samples() as f64 <= 0.05 * series.len() as f64);
    }

    #[test]
    fn threshold_flags_equal_brute_comparison(
        scores in prop::collection::vec(0f64..10.0, 1..200),
        threshold in -1f64..11.0,
    ) {
        let result = apply_threshold(&scores, threshold, 0);
        let brute: Vec<bool> = scores.iter().map(|s| *s > threshold).collect();
        prop_assert_eq!(&result.flags, &brute);
        result.check_consistency().unwrap();
    }

    #[test]
    fn confusion_matches_elementwise_oracle(
        flags in prop::collection::vec(any::<bool>(), 1..300),
        seed in 0u64..1000,
    ) {
        // Derive a mask from the seed so lengths always align.
        let mask: Vec<bool> = flags
            .iter()
            .enumerate()
            .map(|(i, _)| (i as u64).wrapping_mul(seed + 7) % 5 == 0)
            .collect();
        let counts = confusion(&flags, &mask, 0).unwrap();
        let mut oracle = ConfusionCounts::default();
        for (f, m) in flags.iter().zip(mask.iter()) {
            match (f, m) {
                (true, true) => oracle.true_positives += 1,
                (true, false) => oracle.false_positives += 1,
                (false, true) => oracle.false_negatives += 1,
                (false, false) => oracle.true_negatives += 1,
            }
        }
        prop_assert_eq!(counts, oracle);
        prop_assert_eq!(counts.total(), flags.len());
    }

    #[test]
    fn f1_is_a_harmonic_mean(tp in 0usize..50, fp in 0usize..50, fn_ in 0usize..50) {
        let counts = ConfusionCounts {
            true_positives: tp,
            false_positives: fp,
            false_negatives: fn_,
            true_negatives: 10,
        };
        let (p, r, f) = (precision(&counts), recall(&counts), f1(&counts));
        if p + r > 0.0 {
            prop_assert!(f >= p.min(r) - 1e-12 && f <= p.max(r) + 1e-12);
        } else {
            prop_assert_eq!(f, 0.0);
        }
    }

    #[test]
    fn csv_round_trip_arbitrary_datasets(
        n in 2usize..40,
        stations in 1usize..4,
        start_ms in 0u64..10_000_000u64,
        seed in 0u64..1000,
    ) {
        // Canonical channel order (station ascending, then mag/angle/freq)
        // is what the loader produces, so generate datasets in that order.
        let mut channels = Vec::new();
        for s in 0..stations {
            for kind in ChannelKind::ALL {
                let values: Vec<f64> = (0..n)
                    .map(|i| {
                        let x = (i as u64 + 1).wrapping_mul(seed + 13 + s as u64)
                            % 100_000;
                        (x as f64) / 97.0 - 500.0
                    })
                    .collect();
                channels.push(PmuChannel {
                    station_id: format!("S{s}"),
                    kind,
                    values,
                    sample_rate: 30.0,
                });
            }
        }
        let dataset = PmuDataset {
            channels,
            start_time: start_ms as f64 / 1000.0,
            station_count: stations,
        };
        let text = save_csv_string(&dataset).unwrap();
        let back = load_csv_str(&text).unwrap();
        prop_assert_eq!(back, dataset);
    }
}
