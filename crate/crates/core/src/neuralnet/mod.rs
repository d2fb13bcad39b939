//! Minimal dense-tensor neural engine: layers with analytically derived
//! forward/backward passes, MSE loss, Adam, and a finite-difference
//! verification harness. All arithmetic is in f64.

pub mod activation;
pub mod gradcheck;
pub mod layer;
pub mod loss;
pub mod lstm;
pub mod network;
pub mod optim;
pub mod tensor;

pub use activation::{logistic, Activation};
pub use gradcheck::{gradient_check, relative_error};
pub use layer::{Conv1d, Dense, Dropout, Flatten, MaxPool1d, Mode};
pub use loss::{mse, mse_grad};
pub use lstm::{BiLstm, Lstm, LstmCell, LstmParams};
pub use network::{Layer, LayerState, Network, NetworkState, ENGINE_VERSION};
pub use optim::Adam;
pub use tensor::Tensor;
