//! The four forecasting architectures, their instantiation into networks,
//! training, and hyperparameter grid search.

mod search;
mod train;

pub use search::{grid_search, Candidate, SearchSpace, TrialResult};
pub use train::{train, EpochLoss, TrainConfig};

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::neuralnet::{
    Activation, BiLstm, Conv1d, Dense, Dropout, Flatten, Layer, Lstm, MaxPool1d, Network,
    NetworkState, ENGINE_VERSION,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelName {
    #[serde(rename = "CNN")]
    Cnn,
    #[serde(rename = "LSTM")]
    Lstm,
    #[serde(rename = "BiLSTM")]
    BiLstm,
    #[serde(rename = "CLSTM")]
    CLstm,
}

impl ModelName {
    pub const ALL: [ModelName; 4] = [
        ModelName::Cnn,
        ModelName::Lstm,
        ModelName::BiLstm,
        ModelName::CLstm,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelName::Cnn => "CNN",
            ModelName::Lstm => "LSTM",
            ModelName::BiLstm => "BiLSTM",
            ModelName::CLstm => "CLSTM",
        }
    }
}

impl fmt::Display for ModelName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for ModelName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cnn" => Ok(ModelName::Cnn),
            "lstm" => Ok(ModelName::Lstm),
            "bilstm" | "bi-lstm" => Ok(ModelName::BiLstm),
            "clstm" | "c-lstm" => Ok(ModelName::CLstm),
            other => Err(Error::Parameter(format!("unknown model name '{other}'"))),
        }
    }
}

/// One layer of a declarative model description.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LayerSpec {
    Conv1d {
        filters: usize,
        kernel_size: usize,
        activation: Activation,
    },
    MaxPool1d {
        pool_size: usize,
    },
    Flatten,
    Dense {
        units: usize,
        activation: Activation,
    },
    Dropout {
        rate: f64,
    },
    Lstm {
        hidden_units: usize,
        return_sequences: bool,
    },
    BiLstm {
        hidden_units: usize,
    },
}

/// Declarative layer stack; building the same name twice yields structurally
/// identical specs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub name: ModelName,
    pub layers: Vec<LayerSpec>,
}

/// Tuned layer stacks for each architecture. The CNN stacks three
/// convolutions (32, 16, 64 filters, kernel 3, relu) ahead of max pooling,
/// flattening, and two dense layers; the recurrent models stack two LSTM
/// layers with 0.12 dropout between them; the hybrid adds a 64-filter
/// convolution in front. Every stack ends in Dense(1).
pub fn build(name: ModelName) -> ModelSpec {
    build_candidate(name, &Candidate::reference(name))
}

/// Parameterized variant of [`build`] used by grid search. The Table-layout
/// ratios are preserved: the CNN's filter counts are (f, f/2, 2f) and the
/// second recurrent layer uses half the hidden units of the first.
pub fn build_candidate(name: ModelName, c: &Candidate) -> ModelSpec {
    let relu = Activation::Relu;
    let half = |n: usize| (n / 2).max(1);
    let layers = match name {
        ModelName::Cnn => vec![
            LayerSpec::Conv1d {
                filters: c.filters,
                kernel_size: c.kernel_size,
                activation: relu,
            },
            LayerSpec::Conv1d {
                filters: half(c.filters),
                kernel_size: c.kernel_size,
                activation: relu,
            },
            LayerSpec::Conv1d {
                filters: c.filters * 2,
                kernel_size: c.kernel_size,
                activation: relu,
            },
            LayerSpec::MaxPool1d { pool_size: 2 },
            LayerSpec::Flatten,
            LayerSpec::Dense {
                units: 50,
                activation: relu,
            },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Identity,
            },
        ],
        ModelName::Lstm => vec![
            LayerSpec::Lstm {
                hidden_units: c.hidden_units,
                return_sequences: true,
            },
            LayerSpec::Dropout { rate: c.dropout },
            LayerSpec::Lstm {
                hidden_units: half(c.hidden_units),
                return_sequences: false,
            },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Identity,
            },
        ],
        ModelName::BiLstm => vec![
            LayerSpec::BiLstm {
                hidden_units: c.hidden_units,
            },
            LayerSpec::Dropout { rate: c.dropout },
            LayerSpec::Lstm {
                hidden_units: half(c.hidden_units),
                return_sequences: false,
            },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Identity,
            },
        ],
        ModelName::CLstm => vec![
            LayerSpec::Conv1d {
                filters: c.filters,
                kernel_size: c.kernel_size,
                activation: relu,
            },
            LayerSpec::Lstm {
                hidden_units: c.hidden_units,
                return_sequences: true,
            },
            LayerSpec::Dropout { rate: c.dropout },
            LayerSpec::Lstm {
                hidden_units: half(c.hidden_units),
                return_sequences: false,
            },
            LayerSpec::Dropout { rate: c.dropout },
            LayerSpec::Dense {
                units: 1,
                activation: Activation::Identity,
            },
        ],
    };
    ModelSpec { name, layers }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Shape {
    Seq(usize, usize),
    Flat(usize),
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Shape::Seq(l, c) => write!(f, "({l}, {c})"),
            Shape::Flat(n) => write!(f, "({n},)"),
        }
    }
}

/// Instantiates a spec into a network for `(window_len, features)` inputs,
/// checking that layer shapes chain and that the stack ends in one output
/// unit. Initialization and dropout masks derive from `seed`.
pub fn instantiate(spec: &ModelSpec, window_len: usize, features: usize, seed: u64) -> Result<Network> {
    let mut init_rng = ChaCha8Rng::seed_from_u64(seed);
    let mut shape = Shape::Seq(window_len, features);
    let mut layers = Vec::with_capacity(spec.layers.len());
    for (idx, layer) in spec.layers.iter().enumerate() {
        let built = match (layer, shape) {
            (
                LayerSpec::Conv1d {
                    filters,
                    kernel_size,
                    activation,
                },
                Shape::Seq(len, ch),
            ) => {
                if *kernel_size > len {
                    return Err(Error::shape(
                        "instantiate",
                        format!("kernel {} <= sequence length", kernel_size),
                        format!("length {len} at layer {idx}"),
                    ));
                }
                shape = Shape::Seq(len - kernel_size + 1, *filters);
                Layer::Conv1d(Conv1d::new(ch, *filters, *kernel_size, *activation, &mut init_rng))
            }
            (LayerSpec::MaxPool1d { pool_size }, Shape::Seq(len, ch)) => {
                if len / pool_size == 0 {
                    return Err(Error::shape(
                        "instantiate",
                        format!("pool {} <= sequence length", pool_size),
                        format!("length {len} at layer {idx}"),
                    ));
                }
                shape = Shape::Seq(len / pool_size, ch);
                Layer::MaxPool1d(MaxPool1d::new(*pool_size, ch)?)
            }
            (LayerSpec::Flatten, Shape::Seq(len, ch)) => {
                shape = Shape::Flat(len * ch);
                Layer::Flatten(Flatten::default())
            }
            (LayerSpec::Dense { units, activation }, Shape::Flat(n)) => {
                shape = Shape::Flat(*units);
                Layer::Dense(Dense::new(n, *units, *activation, &mut init_rng))
            }
            (LayerSpec::Dropout { rate }, _) => {
                // Dropout keeps whatever shape it receives. Its mask RNG is
                // derived from the seed and the layer position.
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(1_000 + idx as u64);
                Layer::Dropout(Dropout::new(*rate, rng)?)
            }
            (
                LayerSpec::Lstm {
                    hidden_units,
                    return_sequences,
                },
                Shape::Seq(len, ch),
            ) => {
                shape = if *return_sequences {
                    Shape::Seq(len, *hidden_units)
                } else {
                    Shape::Flat(*hidden_units)
                };
                Layer::Lstm(Lstm::new(ch, *hidden_units, *return_sequences, &mut init_rng))
            }
            (LayerSpec::BiLstm { hidden_units }, Shape::Seq(len, ch)) => {
                shape = Shape::Seq(len, 2 * hidden_units);
                Layer::BiLstm(BiLstm::new(ch, *hidden_units, &mut init_rng))
            }
            (bad, shape) => {
                return Err(Error::shape(
                    "instantiate",
                    format!("layer {idx} ({bad:?}) on a compatible input"),
                    format!("{shape}"),
                ));
            }
        };
        layers.push(built);
    }
    if shape != Shape::Flat(1) {
        return Err(Error::shape(
            "instantiate",
            "a final layer with exactly 1 output unit",
            format!("{shape}"),
        ));
    }
    Ok(Network::new(layers))
}

/// A trained network together with everything needed to rebuild it: the
/// declarative spec, the input geometry, and the parameter state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub engine: String,
    pub spec: ModelSpec,
    pub window_len: usize,
    pub features: usize,
    pub state: NetworkState,
}

impl TrainedModel {
    pub fn from_network(
        spec: &ModelSpec,
        window_len: usize,
        features: usize,
        network: &Network,
    ) -> Self {
        TrainedModel {
            engine: ENGINE_VERSION.to_string(),
            spec: spec.clone(),
            window_len,
            features,
            state: network.param_state(),
        }
    }

    /// Rebuilds the network with the stored parameters. Dropout is inert at
    /// inference so the reconstruction seed does not affect predictions.
    pub fn to_network(&self) -> Result<Network> {
        let mut net = instantiate(&self.spec, self.window_len, self.features, 0)?;
        net.load_param_state(&self.state)?;
        Ok(net)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cnn_first_layer_matches_reference_parameters() {
        let spec = build(ModelName::Cnn);
        match &spec.layers[0] {
            LayerSpec::Conv1d {
                filters,
                kernel_size,
                activation,
            } => {
                assert_eq!(*filters, 32);
                assert_eq!(*kernel_size, 3);
                assert_eq!(*activation, Activation::Relu);
            }
            other => panic!("unexpected first layer {other:?}"),
        }
    }

    #[test]
    fn clstm_has_two_dropouts_at_twelve_percent() {
        let spec = build(ModelName::CLstm);
        let rates: Vec<f64> = spec
            .layers
            .iter()
            .filter_map(|l| match l {
                LayerSpec::Dropout { rate } => Some(*rate),
                _ => None,
            })
            .collect();
        assert_eq!(rates, vec![0.12, 0.12]);
    }

    #[test]
    fn every_spec_ends_in_dense_one() {
        for name in ModelName::ALL {
            let spec = build(name);
            match spec.layers.last().unwrap() {
                LayerSpec::Dense { units, .. } => assert_eq!(*units, 1, "{name}"),
                other => panic!("{name} ends in {other:?}"),
            }
        }
    }

    #[test]
    fn build_is_pure() {
        for name in ModelName::ALL {
            assert_eq!(build(name), build(name));
        }
    }

    #[test]
    fn instantiate_all_architectures() {
        for name in ModelName::ALL {
            let spec = build(name);
            let net = instantiate(&spec, 30, 1, 7).unwrap();
            assert!(net.num_params() > 0, "{name}");
        }
    }

    #[test]
    fn instantiate_rejects_incompatible_chain() {
        let spec = ModelSpec {
            name: ModelName::Cnn,
            layers: vec![LayerSpec::Dense {
                units: 1,
                activation: Activation::Identity,
            }],
        };
        // Dense cannot consume a (30, 1) sequence without a flatten.
        assert!(instantiate(&spec, 30, 1, 0).is_err());
    }

    #[test]
    fn instantiate_rejects_wide_output() {
        let spec = ModelSpec {
            name: ModelName::Cnn,
            layers: vec![
                LayerSpec::Flatten,
                LayerSpec::Dense {
                    units: 2,
                    activation: Activation::Identity,
                },
            ],
        };
        assert!(instantiate(&spec, 4, 1, 0).is_err());
    }
}
