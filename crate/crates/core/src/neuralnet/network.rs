//! A sequential stack of layers with shared forward/backward plumbing and a
//! JSON-serializable parameter state.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::layer::{Conv1d, Dense, Dropout, Flatten, MaxPool1d, Mode};
use super::lstm::{BiLstm, Lstm};
use super::tensor::Tensor;

/// Engine identifier embedded in serialized networks.
pub const ENGINE_VERSION: &str = concat!("pmu-sentinel-nn/", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone)]
pub enum Layer {
    Dense(Dense),
    Conv1d(Conv1d),
    MaxPool1d(MaxPool1d),
    Flatten(Flatten),
    Dropout(Dropout),
    Lstm(Lstm),
    BiLstm(BiLstm),
}

impl Layer {
    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.forward(x),
            Layer::Conv1d(l) => l.forward(x),
            Layer::MaxPool1d(l) => l.forward(x),
            Layer::Flatten(l) => l.forward(x),
            Layer::Dropout(l) => l.forward(x, mode),
            Layer::Lstm(l) => l.forward(x),
            Layer::BiLstm(l) => l.forward(x),
        }
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        match self {
            Layer::Dense(l) => l.backward(dy),
            Layer::Conv1d(l) => l.backward(dy),
            Layer::MaxPool1d(l) => l.backward(dy),
            Layer::Flatten(l) => l.backward(dy),
            Layer::Dropout(l) => l.backward(dy),
            Layer::Lstm(l) => l.backward(dy),
            Layer::BiLstm(l) => l.backward(dy),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Layer::Dense(_) => "dense",
            Layer::Conv1d(_) => "conv1d",
            Layer::MaxPool1d(_) => "max_pool1d",
            Layer::Flatten(_) => "flatten",
            Layer::Dropout(_) => "dropout",
            Layer::Lstm(_) => "lstm",
            Layer::BiLstm(_) => "bilstm",
        }
    }

    pub fn params(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.w, &l.b],
            Layer::Conv1d(l) => vec![&l.w, &l.b],
            Layer::Lstm(l) => l.cell.param_tensors(),
            Layer::BiLstm(l) => {
                let mut out = l.fwd.param_tensors();
                out.extend(l.bwd.param_tensors());
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor> {
        match self {
            Layer::Dense(l) => vec![&mut l.w, &mut l.b],
            Layer::Conv1d(l) => vec![&mut l.w, &mut l.b],
            Layer::Lstm(l) => l.cell.param_tensors_mut(),
            Layer::BiLstm(l) => {
                let mut out = l.fwd.param_tensors_mut();
                out.extend(l.bwd.param_tensors_mut());
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn grads(&self) -> Vec<&Tensor> {
        match self {
            Layer::Dense(l) => vec![&l.dw, &l.db],
            Layer::Conv1d(l) => vec![&l.dw, &l.db],
            Layer::Lstm(l) => l.cell.grad_tensors(),
            Layer::BiLstm(l) => {
                let mut out = l.fwd.grad_tensors();
                out.extend(l.bwd.grad_tensors());
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn param_grad_pairs(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        match self {
            Layer::Dense(l) => vec![(&mut l.w, &l.dw), (&mut l.b, &l.db)],
            Layer::Conv1d(l) => vec![(&mut l.w, &l.dw), (&mut l.b, &l.db)],
            Layer::Lstm(l) => l.cell.param_grad_pairs(),
            Layer::BiLstm(l) => {
                let mut out = l.fwd.param_grad_pairs();
                out.extend(l.bwd.param_grad_pairs());
                out
            }
            _ => Vec::new(),
        }
    }

    pub fn zero_grads(&mut self) {
        match self {
            Layer::Dense(l) => {
                l.dw.fill(0.0);
                l.db.fill(0.0);
            }
            Layer::Conv1d(l) => {
                l.dw.fill(0.0);
                l.db.fill(0.0);
            }
            Layer::Lstm(l) => l.cell.zero_grads(),
            Layer::BiLstm(l) => {
                l.fwd.zero_grads();
                l.bwd.zero_grads();
            }
            _ => {}
        }
    }
}

#[derive(Debug, Clone)]
pub struct Network {
    pub layers: Vec<Layer>,
}

impl Network {
    pub fn new(layers: Vec<Layer>) -> Self {
        Network { layers }
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let mut cur = x.clone();
        for layer in &mut self.layers {
            cur = layer.forward(&cur, mode)?;
        }
        Ok(cur)
    }

    /// Backpropagates the loss gradient; parameter gradients accumulate in
    /// each layer. Returns the gradient with respect to the network input.
    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let mut cur = dy.clone();
        for layer in self.layers.iter_mut().rev() {
            cur = layer.backward(&cur)?;
        }
        Ok(cur)
    }

    pub fn zero_grads(&mut self) {
        for layer in &mut self.layers {
            layer.zero_grads();
        }
    }

    pub fn param_grad_pairs(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.param_grad_pairs())
            .collect()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .flat_map(|l| l.params())
            .map(|t| t.len())
            .sum()
    }

    /// Inference-mode forward pass producing a single scalar output.
    pub fn predict_scalar(&mut self, x: &Tensor) -> Result<f64> {
        let y = self.forward(x, Mode::Infer)?;
        if y.len() != 1 {
            return Err(Error::shape(
                "predict_scalar",
                "1 output value",
                format!("{:?}", y.shape()),
            ));
        }
        Ok(y.data()[0])
    }

    /// Snapshot of every parameter tensor, in layer order.
    pub fn param_state(&self) -> NetworkState {
        NetworkState {
            engine: ENGINE_VERSION.to_string(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerState {
                    kind: l.kind_name().to_string(),
                    tensors: l.params().into_iter().cloned().collect(),
                })
                .collect(),
        }
    }

    /// Restores parameters captured by `param_state` into a structurally
    /// identical network.
    pub fn load_param_state(&mut self, state: &NetworkState) -> Result<()> {
        if state.layers.len() != self.layers.len() {
            return Err(Error::shape(
                "load_param_state",
                format!("{} layers", self.layers.len()),
                format!("{} layers", state.layers.len()),
            ));
        }
        for (layer, saved) in self.layers.iter_mut().zip(state.layers.iter()) {
            if layer.kind_name() != saved.kind {
                return Err(Error::shape(
                    "load_param_state",
                    layer.kind_name().to_string(),
                    saved.kind.clone(),
                ));
            }
            let mut targets = layer.params_mut();
            if targets.len() != saved.tensors.len() {
                return Err(Error::shape(
                    "load_param_state",
                    format!("{} tensors", targets.len()),
                    format!("{} tensors", saved.tensors.len()),
                ));
            }
            for (target, source) in targets.iter_mut().zip(saved.tensors.iter()) {
                if target.shape() != source.shape() {
                    return Err(Error::shape(
                        "load_param_state",
                        format!("{:?}", target.shape()),
                        format!("{:?}", source.shape()),
                    ));
                }
                target.data_mut().copy_from_slice(source.data());
            }
        }
        Ok(())
    }
}

/// Serialized parameters: one entry per layer with flat value arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkState {
    pub engine: String,
    pub layers: Vec<LayerState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerState {
    pub kind: String,
    pub tensors: Vec<Tensor>,
}
