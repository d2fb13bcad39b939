//! Hyperparameter grid search over the candidate lists of a search space.
//!
//! The space is the cartesian product of the per-hyperparameter lists.
//! Exhaustive when it fits the budget, otherwise a seeded uniform sample
//! without replacement. Trials may run in parallel; each trial trains with
//! its own RNG stream derived from the master seed and the trial index, so
//! results do not depend on scheduling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::preprocess::WindowedSet;

use super::train::{evaluate_mse, train, TrainConfig};
use super::{build_candidate, ModelName};

/// Candidate lists, one per tunable hyperparameter. Lists irrelevant to a
/// model family (e.g. filters for a pure LSTM) should be singletons so they
/// do not inflate the product.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub filters: Vec<usize>,
    pub kernel_sizes: Vec<usize>,
    pub hidden_units: Vec<usize>,
    pub dropout_rates: Vec<f64>,
    pub learning_rates: Vec<f64>,
}

impl SearchSpace {
    pub fn validate(&self) -> Result<()> {
        if self.filters.is_empty()
            || self.kernel_sizes.is_empty()
            || self.hidden_units.is_empty()
            || self.dropout_rates.is_empty()
            || self.learning_rates.is_empty()
        {
            return Err(Error::Parameter(
                "every search-space candidate list must be non-empty".into(),
            ));
        }
        Ok(())
    }

    pub fn size(&self) -> usize {
        self.filters.len()
            * self.kernel_sizes.len()
            * self.hidden_units.len()
            * self.dropout_rates.len()
            * self.learning_rates.len()
    }

    fn candidate(&self, mut idx: usize) -> Candidate {
        let pick = |idx: &mut usize, list_len: usize| {
            let v = *idx % list_len;
            *idx /= list_len;
            v
        };
        let f = pick(&mut idx, self.filters.len());
        let k = pick(&mut idx, self.kernel_sizes.len());
        let h = pick(&mut idx, self.hidden_units.len());
        let d = pick(&mut idx, self.dropout_rates.len());
        let l = pick(&mut idx, self.learning_rates.len());
        Candidate {
            filters: self.filters[f],
            kernel_size: self.kernel_sizes[k],
            hidden_units: self.hidden_units[h],
            dropout: self.dropout_rates[d],
            learning_rate: self.learning_rates[l],
        }
    }
}

/// One point of the search space.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub filters: usize,
    pub kernel_size: usize,
    pub hidden_units: usize,
    pub dropout: f64,
    pub learning_rate: f64,
}

impl Candidate {
    /// The tuned reference values used by [`super::build`].
    pub fn reference(name: ModelName) -> Candidate {
        Candidate {
            filters: match name {
                ModelName::CLstm => 64,
                _ => 32,
            },
            kernel_size: 3,
            hidden_units: 64,
            dropout: 0.12,
            learning_rate: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub candidate: Candidate,
    pub val_mse: f64,
    pub trial_seed: u64,
}

/// Evaluates up to `budget` configurations of `space` by validation MSE and
/// returns them sorted ascending. `threads` caps trial parallelism (1 runs
/// sequentially). Deterministic given `base.seed`.
pub fn grid_search(
    name: ModelName,
    space: &SearchSpace,
    windowed_train: &WindowedSet,
    windowed_val: &WindowedSet,
    budget: usize,
    base: &TrainConfig,
    threads: usize,
) -> Result<Vec<TrialResult>> {
    space.validate()?;
    if budget < 1 {
        return Err(Error::Parameter("budget must be >= 1".into()));
    }
    let total = space.size();
    let mut indices: Vec<usize> = (0..total).collect();
    if total > budget {
        let mut rng = ChaCha8Rng::seed_from_u64(base.seed);
        rng.set_stream(7);
        indices.shuffle(&mut rng);
        indices.truncate(budget);
        indices.sort_unstable();
    }

    let run_trial = |trial_idx: usize, space_idx: usize| -> Result<TrialResult> {
        let candidate = space.candidate(space_idx);
        let spec = build_candidate(name, &candidate);
        let trial_seed = base
            .seed
            .wrapping_add(0x9E37_79B9_7F4A_7C15u64.wrapping_mul(trial_idx as u64 + 1));
        let config = TrainConfig {
            learning_rate: candidate.learning_rate,
            seed: trial_seed,
            ..base.clone()
        };
        let (mut net, _) = train(&spec, windowed_train, &config)?;
        let val_mse = evaluate_mse(&mut net, windowed_val, 0, windowed_val.len())?;
        Ok(TrialResult {
            candidate,
            val_mse,
            trial_seed,
        })
    };

    let mut results: Vec<TrialResult> = Vec::with_capacity(indices.len());
    if threads <= 1 {
        for (trial_idx, &space_idx) in indices.iter().enumerate() {
            results.push(run_trial(trial_idx, space_idx)?);
        }
    } else {
        let jobs: Vec<(usize, usize)> = indices.iter().copied().enumerate().collect();
        for chunk in jobs.chunks(threads) {
            let outcomes: Vec<Result<TrialResult>> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .map(|&(trial_idx, space_idx)| {
                        scope.spawn(move || run_trial(trial_idx, space_idx))
                    })
                    .collect();
                handles.into_iter().map(|h| h.join().expect("trial thread")).collect()
            });
            for outcome in outcomes {
                results.push(outcome?);
            }
        }
    }

    results.sort_by(|a, b| a.val_mse.total_cmp(&b.val_mse));
    Ok(results)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::make_windows;

    fn space_single() -> SearchSpace {
        SearchSpace {
            filters: vec![4],
            kernel_sizes: vec![3],
            hidden_units: vec![4],
            dropout_rates: vec![0.0],
            learning_rates: vec![1e-2],
        }
    }

    fn windows() -> (WindowedSet, WindowedSet) {
        let series: Vec<f64> = (0..140).map(|i| 0.5 + 0.4 * (i as f64 * 0.25).sin()).collect();
        let train = make_windows(&series[..110], 8, 1).unwrap();
        let val = make_windows(&series[110..], 8, 1).unwrap();
        (train, val)
    }

    fn base() -> TrainConfig {
        TrainConfig {
            epochs: 3,
            batch_size: 16,
            learning_rate: 1e-2,
            seed: 21,
            early_stop_patience: None,
        }
    }

    #[test]
    fn single_configuration_ranks_first() {
        let (train_w, val_w) = windows();
        let ranked = grid_search(
            ModelName::Cnn,
            &space_single(),
            &train_w,
            &val_w,
            10,
            &base(),
            1,
        )
        .unwrap();
        assert_eq!(ranked.len(), 1);
        assert!(ranked[0].val_mse.is_finite());
    }

    #[test]
    fn budget_caps_the_trial_count() {
        let (train_w, val_w) = windows();
        let mut space = space_single();
        space.hidden_units = vec![2, 4, 6, 8];
        space.learning_rates = vec![1e-2, 3e-3];
        let ranked = grid_search(ModelName::Lstm, &space, &train_w, &val_w, 3, &base(), 1).unwrap();
        assert_eq!(ranked.len(), 3);
        for pair in ranked.windows(2) {
            assert!(pair[0].val_mse <= pair[1].val_mse);
        }
    }

    #[test]
    fn empty_space_is_rejected() {
        let (train_w, val_w) = windows();
        let mut space = space_single();
        space.hidden_units.clear();
        assert!(grid_search(ModelName::Lstm, &space, &train_w, &val_w, 1, &base(), 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let (train_w, val_w) = windows();
        let mut space = space_single();
        space.hidden_units = vec![2, 4];
        let a = grid_search(ModelName::Lstm, &space, &train_w, &val_w, 2, &base(), 1).unwrap();
        let b = grid_search(ModelName::Lstm, &space, &train_w, &val_w, 2, &base(), 1).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn parallel_matches_sequential() {
        let (train_w, val_w) = windows();
        let mut space = space_single();
        space.hidden_units = vec![2, 4, 6];
        let seq = grid_search(ModelName::Lstm, &space, &train_w, &val_w, 3, &base(), 1).unwrap();
        let par = grid_search(ModelName::Lstm, &space, &train_w, &val_w, 3, &base(), 2).unwrap();
        assert_eq!(seq, par);
    }
}
