//! Feedforward layers: dense, 1-D convolution, max pooling, flatten, dropout.
//!
//! Every layer caches what its own backward pass needs during `forward` and
//! accumulates parameter gradients across calls; callers zero the gradients
//! between optimization steps. Gradients are exact analytic derivatives.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::activation::Activation;
use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

pub(crate) fn uniform_init(rng: &mut ChaCha8Rng, bound: f64, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-bound..bound)).collect()
}

pub(crate) fn glorot_bound(fan_in: usize, fan_out: usize) -> f64 {
    (6.0 / (fan_in + fan_out) as f64).sqrt()
}

/// Fully connected layer: y = act(x W + b) over a flat input.
#[derive(Debug, Clone)]
pub struct Dense {
    pub w: Tensor, // (in, out)
    pub b: Tensor, // (out,)
    pub activation: Activation,
    pub dw: Tensor,
    pub db: Tensor,
    in_dim: usize,
    out_dim: usize,
    cached_x: Vec<f64>,
    cached_z: Vec<f64>,
}

impl Dense {
    pub fn new(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut ChaCha8Rng) -> Self {
        let bound = glorot_bound(in_dim, out_dim);
        // Biases draw from ±1/sqrt(fan_in); an exactly-zero bias would park
        // relu pre-activations on the kink whenever the input goes dead.
        let b_bound = 1.0 / (in_dim as f64).sqrt();
        Dense {
            w: Tensor::from_vec(&[in_dim, out_dim], uniform_init(rng, bound, in_dim * out_dim))
                .expect("consistent shape"),
            b: Tensor::from_vec(&[out_dim], uniform_init(rng, b_bound, out_dim))
                .expect("consistent shape"),
            activation,
            dw: Tensor::zeros(&[in_dim, out_dim]),
            db: Tensor::zeros(&[out_dim]),
            in_dim,
            out_dim,
            cached_x: Vec::new(),
            cached_z: Vec::new(),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        if x.len() != self.in_dim {
            return Err(Error::shape(
                "dense_forward",
                format!("input of {} values", self.in_dim),
                format!("{:?}", x.shape()),
            ));
        }
        let mut z = self.b.data().to_vec();
        matvec_acc(self.w.data(), self.in_dim, self.out_dim, x.data(), &mut z);
        self.cached_x = x.data().to_vec();
        self.cached_z = z.clone();
        let y: Vec<f64> = z.into_iter().map(|v| self.activation.apply(v)).collect();
        Tensor::from_vec(&[self.out_dim], y)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        if dy.len() != self.out_dim {
            return Err(Error::shape(
                "dense_backward",
                format!("gradient of {} values", self.out_dim),
                format!("{:?}", dy.shape()),
            ));
        }
        let dz: Vec<f64> = dy
            .data()
            .iter()
            .zip(self.cached_z.iter())
            .map(|(d, z)| d * self.activation.derivative(*z))
            .collect();
        outer_acc(
            self.dw.data_mut(),
            self.in_dim,
            self.out_dim,
            &self.cached_x,
            &dz,
        );
        for (g, d) in self.db.data_mut().iter_mut().zip(dz.iter()) {
            *g += d;
        }
        let mut dx = vec![0.0; self.in_dim];
        matvec_t_acc(self.w.data(), self.in_dim, self.out_dim, &dz, &mut dx);
        Tensor::from_vec(&[self.in_dim], dx)
    }
}

/// Valid (no-padding) 1-D cross-correlation over a (len, channels) input.
#[derive(Debug, Clone)]
pub struct Conv1d {
    pub w: Tensor, // (kernel, ch_in, ch_out)
    pub b: Tensor, // (ch_out,)
    pub activation: Activation,
    pub dw: Tensor,
    pub db: Tensor,
    kernel: usize,
    ch_in: usize,
    ch_out: usize,
    cached_x: Vec<f64>,
    cached_z: Vec<f64>,
    cached_len: usize,
}

impl Conv1d {
    pub fn new(
        ch_in: usize,
        ch_out: usize,
        kernel: usize,
        activation: Activation,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let bound = glorot_bound(kernel * ch_in, kernel * ch_out);
        let b_bound = 1.0 / ((kernel * ch_in) as f64).sqrt();
        Conv1d {
            w: Tensor::from_vec(
                &[kernel, ch_in, ch_out],
                uniform_init(rng, bound, kernel * ch_in * ch_out),
            )
            .expect("consistent shape"),
            b: Tensor::from_vec(&[ch_out], uniform_init(rng, b_bound, ch_out))
                .expect("consistent shape"),
            activation,
            dw: Tensor::zeros(&[kernel, ch_in, ch_out]),
            db: Tensor::zeros(&[ch_out]),
            kernel,
            ch_in,
            ch_out,
            cached_x: Vec::new(),
            cached_z: Vec::new(),
            cached_len: 0,
        }
    }

    fn check_input(&self, x: &Tensor) -> Result<usize> {
        let shape = x.shape();
        if shape.len() != 2 || shape[1] != self.ch_in {
            return Err(Error::shape(
                "conv1d_forward",
                format!("(len, {})", self.ch_in),
                format!("{:?}", shape),
            ));
        }
        if shape[0] < self.kernel {
            return Err(Error::shape(
                "conv1d_forward",
                format!("len >= kernel {}", self.kernel),
                format!("len {}", shape[0]),
            ));
        }
        Ok(shape[0])
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let len = self.check_input(x)?;
        let out_len = len - self.kernel + 1;
        let (ci, co) = (self.ch_in, self.ch_out);
        let mut z = vec![0.0; out_len * co];
        let xd = x.data();
        let wd = self.w.data();
        for t in 0..out_len {
            let zt = &mut z[t * co..(t + 1) * co];
            zt.copy_from_slice(self.b.data());
            // Input window rows t..t+kernel against the (kernel*ci, co) weight block.
            matvec_acc(wd, self.kernel * ci, co, &xd[t * ci..(t + self.kernel) * ci], zt);
        }
        self.cached_x = xd.to_vec();
        self.cached_z = z.clone();
        self.cached_len = len;
        let y: Vec<f64> = z.into_iter().map(|v| self.activation.apply(v)).collect();
        Tensor::from_vec(&[out_len, co], y)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let len = self.cached_len;
        let out_len = len - self.kernel + 1;
        let (ci, co) = (self.ch_in, self.ch_out);
        if dy.shape() != [out_len, co] {
            return Err(Error::shape(
                "conv1d_backward",
                format!("({}, {})", out_len, co),
                format!("{:?}", dy.shape()),
            ));
        }
        let mut dx = vec![0.0; len * ci];
        for t in 0..out_len {
            let mut dz = [0.0f64; 0].to_vec();
            dz.extend(
                dy.row(t)
                    .iter()
                    .zip(&self.cached_z[t * co..(t + 1) * co])
                    .map(|(d, z)| d * self.activation.derivative(*z)),
            );
            let window = &self.cached_x[t * ci..(t + self.kernel) * ci];
            outer_acc(self.dw.data_mut(), self.kernel * ci, co, window, &dz);
            for (g, d) in self.db.data_mut().iter_mut().zip(dz.iter()) {
                *g += d;
            }
            matvec_t_acc(
                self.w.data(),
                self.kernel * ci,
                co,
                &dz,
                &mut dx[t * ci..(t + self.kernel) * ci],
            );
        }
        Tensor::from_vec(&[len, ci], dx)
    }
}

/// Non-overlapping max pooling along the time axis; the trailing remainder
/// is dropped and ties break toward the earliest index.
#[derive(Debug, Clone)]
pub struct MaxPool1d {
    pool: usize,
    channels: usize,
    cached_len: usize,
    argmax: Vec<usize>,
}

impl MaxPool1d {
    pub fn new(pool: usize, channels: usize) -> Result<Self> {
        if pool < 1 {
            return Err(Error::Parameter(format!(
                "pool_size must be >= 1, got {pool}"
            )));
        }
        Ok(MaxPool1d {
            pool,
            channels,
            cached_len: 0,
            argmax: Vec::new(),
        })
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let shape = x.shape();
        if shape.len() != 2 || shape[1] != self.channels {
            return Err(Error::shape(
                "maxpool1d",
                format!("(len, {})", self.channels),
                format!("{:?}", shape),
            ));
        }
        let len = shape[0];
        let out_len = len / self.pool;
        if out_len == 0 {
            return Err(Error::shape(
                "maxpool1d",
                format!("len >= pool {}", self.pool),
                format!("len {}", len),
            ));
        }
        let c = self.channels;
        let xd = x.data();
        let mut y = vec![0.0; out_len * c];
        self.argmax = vec![0; out_len * c];
        for w in 0..out_len {
            for ch in 0..c {
                let mut best = f64::NEG_INFINITY;
                let mut best_t = w * self.pool;
                for t in w * self.pool..(w + 1) * self.pool {
                    let v = xd[t * c + ch];
                    if v > best {
                        best = v;
                        best_t = t;
                    }
                }
                y[w * c + ch] = best;
                self.argmax[w * c + ch] = best_t;
            }
        }
        self.cached_len = len;
        Tensor::from_vec(&[out_len, c], y)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let c = self.channels;
        let out_len = self.cached_len / self.pool;
        if dy.shape() != [out_len, c] {
            return Err(Error::shape(
                "maxpool1d_backward",
                format!("({}, {})", out_len, c),
                format!("{:?}", dy.shape()),
            ));
        }
        let mut dx = vec![0.0; self.cached_len * c];
        for (slot, d) in dy.data().iter().enumerate() {
            let ch = slot % c;
            dx[self.argmax[slot] * c + ch] += d;
        }
        Tensor::from_vec(&[self.cached_len, c], dx)
    }
}

/// Reshape (len, channels) to a flat vector.
#[derive(Debug, Clone, Default)]
pub struct Flatten {
    cached_shape: Vec<usize>,
}

impl Flatten {
    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        self.cached_shape = x.shape().to_vec();
        x.reshaped(&[x.len()])
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        dy.reshaped(&self.cached_shape)
    }
}

/// Inverted dropout: surviving activations are scaled by 1/(1-rate) during
/// training so inference is the identity.
#[derive(Debug, Clone)]
pub struct Dropout {
    pub rate: f64,
    rng: ChaCha8Rng,
    mask: Vec<f64>,
}

impl Dropout {
    pub fn new(rate: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Parameter(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        Ok(Dropout {
            rate,
            rng,
            mask: Vec::new(),
        })
    }

    pub fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        if mode == Mode::Infer || self.rate == 0.0 {
            self.mask.clear();
            return Ok(x.clone());
        }
        let keep = 1.0 - self.rate;
        let scale = 1.0 / keep;
        self.mask = (0..x.len())
            .map(|_| {
                if self.rng.gen::<f64>() < keep {
                    scale
                } else {
                    0.0
                }
            })
            .collect();
        let y: Vec<f64> = x
            .data()
            .iter()
            .zip(self.mask.iter())
            .map(|(v, m)| v * m)
            .collect();
        Tensor::from_vec(x.shape(), y)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        if self.mask.is_empty() {
            return Ok(dy.clone());
        }
        if dy.len() != self.mask.len() {
            return Err(Error::shape(
                "dropout_backward",
                format!("{} values", self.mask.len()),
                format!("{:?}", dy.shape()),
            ));
        }
        let dx: Vec<f64> = dy
            .data()
            .iter()
            .zip(self.mask.iter())
            .map(|(d, m)| d * m)
            .collect();
        Tensor::from_vec(dy.shape(), dx)
    }
}
