//! One-step-ahead forecaster training: seeded mini-batch Adam on MSE with
//! optional early stopping.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{mse_grad, Adam, Mode, Network, Tensor};
use crate::preprocess::WindowedSet;

use super::{instantiate, ModelSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub seed: u64,
    /// Number of non-improving epochs tolerated before training stops and the
    /// best parameters are restored. `None` disables early stopping.
    pub early_stop_patience: Option<usize>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 32,
            learning_rate: 1e-3,
            seed: 0,
            early_stop_patience: Some(5),
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs < 1 {
            return Err(Error::Parameter("epochs must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Parameter("batch_size must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::Parameter(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            )));
        }
        Ok(())
    }
}

/// Losses of one completed epoch. `val_mse` is present when a validation tail
/// was carved from the training windows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochLoss {
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

/// Fraction of the training windows reserved as a chronological validation
/// tail for reporting (the most recent 10%).
const VAL_TAIL_FRACTION: f64 = 0.1;

/// Trains `spec` on the windowed set and returns the fitted network plus one
/// loss entry per completed epoch. Early stopping monitors the training loss;
/// when it triggers, parameters are restored to the best epoch and the
/// history is truncated there, so at patience 0 the recorded loss sequence is
/// non-increasing. Deterministic given the seed.
pub fn train(
    spec: &ModelSpec,
    windows: &WindowedSet,
    config: &TrainConfig,
) -> Result<(Network, Vec<EpochLoss>)> {
    config.validate()?;
    if windows.is_empty() {
        return Err(Error::Parameter("windowed set is empty".into()));
    }
    let mut net = instantiate(spec, windows.window_len, 1, config.seed)?;

    let val_len = ((windows.len() as f64) * VAL_TAIL_FRACTION).floor() as usize;
    let train_len = windows.len() - val_len;
    if train_len == 0 {
        return Err(Error::Parameter(
            "validation tail leaves no training windows".into(),
        ));
    }

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.seed);
    shuffle_rng.set_stream(2);
    let mut order: Vec<usize> = (0..train_len).collect();
    let mut adam = Adam::new(config.learning_rate);

    let mut history: Vec<EpochLoss> = Vec::with_capacity(config.epochs);
    let mut best_loss = f64::INFINITY;
    let mut best_epoch = 0usize;
    let mut best_state = None;
    let mut strikes = 0usize;

    for epoch in 0..config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut epoch_sq_err = 0.0;
        for (batch_idx, batch) in order.chunks(config.batch_size).enumerate() {
            net.zero_grads();
            let mut batch_sq_err = 0.0;
            for &i in batch {
                let (x, target) = windows.sample(i);
                let y = Tensor::vector(&[target]);
                let out = net.forward(&x, Mode::Train)?;
                let dy = mse_grad(&y, &out)?;
                net.backward(&dy)?;
                batch_sq_err += (out.data()[0] - target).powi(2);
            }
            if !batch_sq_err.is_finite() {
                return Err(Error::Numeric(format!(
                    "NaN loss at epoch {epoch}, batch {batch_idx}"
                )));
            }
            epoch_sq_err += batch_sq_err;
            let scale = 1.0 / batch.len() as f64;
            adam.step(&mut net.param_grad_pairs(), scale)?;
        }
        let train_mse = epoch_sq_err / train_len as f64;
        let val_mse = if val_len > 0 {
            Some(evaluate_mse(&mut net, windows, train_len, windows.len())?)
        } else {
            None
        };
        history.push(EpochLoss { train_mse, val_mse });

        if let Some(patience) = config.early_stop_patience {
            if train_mse < best_loss {
                best_loss = train_mse;
                best_epoch = epoch;
                best_state = Some(net.param_state());
                strikes = 0;
            } else {
                strikes += 1;
                if strikes > patience {
                    if let Some(state) = &best_state {
                        net.load_param_state(state)?;
                    }
                    history.truncate(best_epoch + 1);
                    break;
                }
            }
        }
    }
    Ok((net, history))
}

/// Inference-mode MSE over the window range [from, to).
pub fn evaluate_mse(
    net: &mut Network,
    windows: &WindowedSet,
    from: usize,
    to: usize,
) -> Result<f64> {
    if from >= to || to > windows.len() {
        return Err(Error::Parameter(format!(
            "invalid evaluation range {from}..{to} over {} windows",
            windows.len()
        )));
    }
    let mut sum = 0.0;
    for i in from..to {
        let (x, target) = windows.sample(i);
        let pred = net.predict_scalar(&x)?;
        sum += (pred - target).powi(2);
    }
    Ok(sum / (to - from) as f64)
}
