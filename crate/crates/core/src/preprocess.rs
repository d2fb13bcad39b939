//! Noise filtration, angle unwrapping, normalization, chronological splitting,
//! and supervised windowing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::Tensor;

/// Default median filter order: 15 samples, half a second at 30 Hz. Long
/// enough to suppress sub-half-second noise, short enough to keep load steps.
pub const DEFAULT_FILTER_ORDER: usize = 15;

/// Default supervised window: one second of context, one step ahead.
pub const DEFAULT_WINDOW_LEN: usize = 30;
pub const DEFAULT_HORIZON: usize = 1;

/// Running median smoother. `order` is the window length; it must be odd so
/// that windows center on each sample. Edges are padded by replicating the
/// boundary value, so the output length equals the input length.
pub fn median_filter(series: &[f64], order: usize) -> Result<Vec<f64>> {
    if order == 0 || order % 2 == 0 {
        return Err(Error::Parameter(format!(
            "filter order must be odd and positive, got {order}"
        )));
    }
    if order > series.len() {
        return Err(Error::Parameter(format!(
            "filter order {order} exceeds series length {}",
            series.len()
        )));
    }
    if order == 1 {
        return Ok(series.to_vec());
    }
    let half = order / 2;
    let n = series.len();
    let mut out = Vec::with_capacity(n);
    let mut window: Vec<f64> = Vec::with_capacity(order);
    for i in 0..n {
        window.clear();
        for offset in -(half as isize)..=(half as isize) {
            let idx = (i as isize + offset).clamp(0, n as isize - 1) as usize;
            window.push(series[idx]);
        }
        // Median via selection rather than a full sort.
        let (_, median, _) = window.select_nth_unstable_by(half, |a, b| a.total_cmp(b));
        out.push(*median);
    }
    Ok(out)
}

/// Removes the conventional ±360° jumps at the ±180° boundary. The first
/// output equals the first input, every consecutive output difference lies in
/// (-180, 180], and each output is congruent to its input modulo 360.
pub fn unwrap_angles(angles_deg: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(angles_deg.len());
    let Some(&first) = angles_deg.first() else {
        return out;
    };
    out.push(first);
    for pair in angles_deg.windows(2) {
        let raw_delta = pair[1] - pair[0];
        let wrapped = raw_delta.rem_euclid(360.0);
        let delta = if wrapped > 180.0 {
            wrapped - 360.0
        } else {
            wrapped
        };
        out.push(out.last().unwrap() + delta);
    }
    out
}

/// Per-channel min/max captured on the training portion of the data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl ScalerParams {
    /// Fits one (min, max) pair per column. Fit on the training portion only;
    /// test values outside the range simply map outside [0, 1].
    pub fn fit(columns: &[&[f64]]) -> Result<ScalerParams> {
        let mut min = Vec::with_capacity(columns.len());
        let mut max = Vec::with_capacity(columns.len());
        for (idx, col) in columns.iter().enumerate() {
            if col.is_empty() {
                return Err(Error::Parameter(format!(
                    "cannot fit scaler on empty channel {idx}"
                )));
            }
            let mut lo = f64::INFINITY;
            let mut hi = f64::NEG_INFINITY;
            for v in col.iter() {
                lo = lo.min(*v);
                hi = hi.max(*v);
            }
            min.push(lo);
            max.push(hi);
        }
        Ok(ScalerParams { min, max })
    }

    pub fn fit_single(series: &[f64]) -> Result<ScalerParams> {
        ScalerParams::fit(&[series])
    }

    /// Maps channel `idx` affinely onto [0, 1] using the fitted range. A
    /// degenerate constant channel (max == min) maps to all zeros.
    pub fn apply(&self, idx: usize, series: &[f64]) -> Vec<f64> {
        let (lo, hi) = (self.min[idx], self.max[idx]);
        let span = hi - lo;
        if span == 0.0 {
            return vec![0.0; series.len()];
        }
        series.iter().map(|v| (v - lo) / span).collect()
    }

    pub fn invert(&self, idx: usize, series: &[f64]) -> Vec<f64> {
        let (lo, hi) = (self.min[idx], self.max[idx]);
        let span = hi - lo;
        if span == 0.0 {
            return vec![lo; series.len()];
        }
        series.iter().map(|v| lo + v * span).collect()
    }
}

/// First ⌊n·fraction⌋ samples and the remainder, in time order.
pub fn split_point(n: usize, train_fraction: f64) -> Result<usize> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::Parameter(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    Ok((n as f64 * train_fraction).floor() as usize)
}

pub fn chronological_split(series: &[f64], train_fraction: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    let cut = split_point(series.len(), train_fraction)?;
    Ok((series[..cut].to_vec(), series[cut..].to_vec()))
}

/// Supervised one-step-ahead windows over a single series.
///
/// `inputs` has shape (num_windows, window_len, 1) and `targets` has shape
/// (num_windows, 1); target `i` is the value `horizon` steps after window `i`
/// ends, so `num_windows = len - window_len - horizon + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct WindowedSet {
    pub inputs: Tensor,
    pub targets: Tensor,
    pub window_len: usize,
    pub horizon: usize,
}

impl WindowedSet {
    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Series index that target `i` refers to is `i + window_offset()`.
    pub fn window_offset(&self) -> usize {
        self.window_len + self.horizon - 1
    }

    /// Input window `i` as a (window_len, 1) tensor plus its target value.
    pub fn sample(&self, i: usize) -> (Tensor, f64) {
        let w = self.window_len;
        let x = Tensor::from_vec(&[w, 1], self.inputs.data()[i * w..(i + 1) * w].to_vec())
            .expect("window shape is consistent");
        (x, self.targets.data()[i])
    }
}

pub fn make_windows(series: &[f64], window_len: usize, horizon: usize) -> Result<WindowedSet> {
    if window_len < 1 || horizon < 1 {
        return Err(Error::Parameter(format!(
            "window_len and horizon must be >= 1, got {window_len} and {horizon}"
        )));
    }
    let needed = window_len + horizon;
    if series.len() < needed {
        return Err(Error::Parameter(format!(
            "series of length {} is too short for window_len {window_len} + horizon {horizon}",
            series.len()
        )));
    }
    let num = series.len() - window_len - horizon + 1;
    let mut inputs = Vec::with_capacity(num * window_len);
    let mut targets = Vec::with_capacity(num);
    for i in 0..num {
        inputs.extend_from_slice(&series[i..i + window_len]);
        targets.push(series[i + window_len + horizon - 1]);
    }
    Ok(WindowedSet {
        inputs: Tensor::from_vec(&[num, window_len, 1], inputs)?,
        targets: Tensor::from_vec(&[num, 1], targets)?,
        window_len,
        horizon,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn median_order_one_is_identity() {
        let s = [3.0, 1.0, 4.0, 1.0, 5.0];
        assert_eq!(median_filter(&s, 1).unwrap(), s.to_vec());
    }

    #[test]
    fn median_hand_example_with_replicate_padding() {
        let s = [1.0, 9.0, 2.0, 8.0, 3.0];
        assert_eq!(
            median_filter(&s, 3).unwrap(),
            vec![1.0, 2.0, 8.0, 3.0, 3.0]
        );
    }

    #[test]
    fn median_constant_series_unchanged() {
        let s = [7.0; 20];
        assert_eq!(median_filter(&s, 7).unwrap(), s.to_vec());
    }

    #[test]
    fn median_rejects_bad_order() {
        let s = [1.0, 2.0, 3.0];
        assert!(median_filter(&s, 0).is_err());
        assert!(median_filter(&s, 2).is_err());
        assert!(median_filter(&s, 5).is_err());
    }

    #[test]
    fn median_removes_short_spike() {
        let mut s = vec![2.0; 60];
        s[30] = 50.0;
        s[31] = 50.0;
        let filtered = median_filter(&s, 15).unwrap();
        assert!(filtered.iter().all(|v| *v == 2.0));
    }

    #[test]
    fn unwrap_no_wrap_present() {
        assert_eq!(
            unwrap_angles(&[0.0, 10.0, 20.0]),
            vec![0.0, 10.0, 20.0]
        );
    }

    #[test]
    fn unwrap_single_correction() {
        assert_eq!(unwrap_angles(&[170.0, -175.0]), vec![170.0, 185.0]);
    }

    #[test]
    fn unwrap_recovers_linear_ramp() {
        use crate::pmu_data::wrap_angle_deg;
        // 10k samples of a 47 deg/step ramp, wrapped, must unwrap back to the
        // ramp up to the congruence class of the starting point.
        let ramp: Vec<f64> = (0..10_000).map(|i| 3.0 + i as f64 * 47.0).collect();
        let wrapped: Vec<f64> = ramp.iter().map(|a| wrap_angle_deg(*a)).collect();
        let unwrapped = unwrap_angles(&wrapped);
        let offset = ramp[0] - unwrapped[0];
        assert!((offset / 360.0 - (offset / 360.0).round()).abs() < 1e-9);
        for (u, r) in unwrapped.iter().zip(ramp.iter()) {
            assert!((u + offset - r).abs() < 1e-6);
        }
    }

    #[test]
    fn scaler_endpoints_define_the_map() {
        let params = ScalerParams::fit_single(&[0.0, 5.0, 10.0]).unwrap();
        assert_eq!(params.apply(0, &[0.0, 5.0, 10.0]), vec![0.0, 0.5, 1.0]);
    }

    #[test]
    fn scaler_constant_channel_maps_to_zero() {
        let params = ScalerParams::fit_single(&[7.0, 7.0, 7.0]).unwrap();
        assert_eq!(params.apply(0, &[7.0, 7.0, 7.0]), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn scaler_does_not_clamp_test_values() {
        let params = ScalerParams::fit_single(&[0.0, 10.0]).unwrap();
        let scaled = params.apply(0, &[-5.0, 15.0]);
        assert_eq!(scaled, vec![-0.5, 1.5]);
    }

    #[test]
    fn split_follows_floor_rule() {
        assert_eq!(split_point(10, 0.8).unwrap(), 8);
        assert_eq!(split_point(5, 0.8).unwrap(), 4);
        assert!(split_point(10, 0.0).is_err());
        assert!(split_point(10, 1.0).is_err());
    }

    #[test]
    fn split_partitions_the_series() {
        let s: Vec<f64> = (0..17).map(|v| v as f64).collect();
        let (train, test) = chronological_split(&s, 0.8).unwrap();
        let mut joined = train.clone();
        joined.extend_from_slice(&test);
        assert_eq!(joined, s);
    }

    #[test]
    fn windows_tiny_exhaustive_case() {
        let set = make_windows(&[1.0, 2.0, 3.0, 4.0], 2, 1).unwrap();
        assert_eq!(set.len(), 2);
        assert_eq!(set.inputs.data(), &[1.0, 2.0, 2.0, 3.0]);
        assert_eq!(set.targets.data(), &[3.0, 4.0]);
        assert_eq!(set.window_offset(), 2);
    }

    #[test]
    fn windows_boundary_single_window() {
        let s = [1.0, 2.0, 3.0, 4.0, 5.0];
        let set = make_windows(&s, 4, 1).unwrap();
        assert_eq!(set.len(), 1);
        assert_eq!(set.targets.data(), &[5.0]);
    }

    #[test]
    fn windows_too_short_series_errors() {
        assert!(make_windows(&[1.0, 2.0], 2, 1).is_err());
    }
}
