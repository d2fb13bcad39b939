//! LSTM and bidirectional LSTM layers with exact backpropagation through time.
//!
//! Gate order throughout is input, forget, output, candidate. Gates use the
//! logistic activation, the candidate and cell output use tanh, and both
//! initial states are zero:
//!
//!   i_t = σ(x_t W_xi + h_{t-1} W_hi + b_i)
//!   f_t = σ(x_t W_xf + h_{t-1} W_hf + b_f)
//!   o_t = σ(x_t W_xo + h_{t-1} W_ho + b_o)
//!   g_t = tanh(x_t W_xc + h_{t-1} W_hc + b_c)
//!   c_t = f_t ⊙ c_{t-1} + i_t ⊙ g_t
//!   h_t = o_t ⊙ tanh(c_t)

use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

use super::activation::logistic;
use super::layer::{glorot_bound, uniform_init};
use super::tensor::{matvec_acc, matvec_t_acc, outer_acc, Tensor};

pub const GATE_INPUT: usize = 0;
pub const GATE_FORGET: usize = 1;
pub const GATE_OUTPUT: usize = 2;
pub const GATE_CANDIDATE: usize = 3;

/// Weights for one LSTM cell.
#[derive(Debug, Clone)]
pub struct LstmParams {
    /// Input-to-gate matrices, each (input_dim, hidden).
    pub w_x: [Tensor; 4],
    /// Hidden-to-gate matrices, each (hidden, hidden).
    pub w_h: [Tensor; 4],
    /// Gate biases, each (hidden,).
    pub b: [Tensor; 4],
    pub input_dim: usize,
    pub hidden_units: usize,
}

impl LstmParams {
    pub fn new(input_dim: usize, hidden_units: usize, rng: &mut ChaCha8Rng) -> Self {
        let xb = glorot_bound(input_dim, hidden_units);
        let hb = (1.0 / hidden_units as f64).sqrt();
        let wx = |rng: &mut ChaCha8Rng| {
            Tensor::from_vec(
                &[input_dim, hidden_units],
                uniform_init(rng, xb, input_dim * hidden_units),
            )
            .expect("consistent shape")
        };
        let wh = |rng: &mut ChaCha8Rng| {
            Tensor::from_vec(
                &[hidden_units, hidden_units],
                uniform_init(rng, hb, hidden_units * hidden_units),
            )
            .expect("consistent shape")
        };
        LstmParams {
            w_x: [wx(rng), wx(rng), wx(rng), wx(rng)],
            w_h: [wh(rng), wh(rng), wh(rng), wh(rng)],
            b: [
                Tensor::zeros(&[hidden_units]),
                Tensor::zeros(&[hidden_units]),
                Tensor::zeros(&[hidden_units]),
                Tensor::zeros(&[hidden_units]),
            ],
            input_dim,
            hidden_units,
        }
    }

    pub fn zeroed(input_dim: usize, hidden_units: usize) -> Self {
        let z2 = || Tensor::zeros(&[input_dim, hidden_units]);
        let zh = || Tensor::zeros(&[hidden_units, hidden_units]);
        let zb = || Tensor::zeros(&[hidden_units]);
        LstmParams {
            w_x: [z2(), z2(), z2(), z2()],
            w_h: [zh(), zh(), zh(), zh()],
            b: [zb(), zb(), zb(), zb()],
            input_dim,
            hidden_units,
        }
    }
}

/// One LSTM cell plus everything its backward pass needs.
#[derive(Debug, Clone)]
pub struct LstmCell {
    pub params: LstmParams,
    pub grads: LstmParams,
    // Per-run caches, all (steps × width) row-major.
    x: Vec<f64>,
    h: Vec<f64>,
    c: Vec<f64>,
    tanh_c: Vec<f64>,
    gates: [Vec<f64>; 4],
    steps: usize,
}

impl LstmCell {
    pub fn new(input_dim: usize, hidden_units: usize, rng: &mut ChaCha8Rng) -> Self {
        LstmCell {
            params: LstmParams::new(input_dim, hidden_units, rng),
            grads: LstmParams::zeroed(input_dim, hidden_units),
            x: Vec::new(),
            h: Vec::new(),
            c: Vec::new(),
            tanh_c: Vec::new(),
            gates: [Vec::new(), Vec::new(), Vec::new(), Vec::new()],
            steps: 0,
        }
    }

    pub fn hidden_units(&self) -> usize {
        self.params.hidden_units
    }

    /// Runs the cell over a (steps, input_dim) sequence; returns (steps, hidden).
    pub fn forward_seq(&mut self, x: &Tensor) -> Result<Tensor> {
        let d = self.params.input_dim;
        let h = self.params.hidden_units;
        let shape = x.shape();
        if shape.len() != 2 || shape[1] != d || shape[0] == 0 {
            return Err(Error::shape(
                "lstm_forward",
                format!("(steps >= 1, {})", d),
                format!("{:?}", shape),
            ));
        }
        let steps = shape[0];
        self.steps = steps;
        self.x = x.data().to_vec();
        self.h = vec![0.0; steps * h];
        self.c = vec![0.0; steps * h];
        self.tanh_c = vec![0.0; steps * h];
        for g in &mut self.gates {
            g.clear();
            g.resize(steps * h, 0.0);
        }

        let zeros = vec![0.0; h];
        let mut pre = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
        for t in 0..steps {
            let x_t = &self.x[t * d..(t + 1) * d];
            let (h_prev, c_prev) = if t == 0 {
                (&zeros[..], &zeros[..])
            } else {
                (&self.h[(t - 1) * h..t * h], &self.c[(t - 1) * h..t * h])
            };
            // h_prev/c_prev borrow self.h/self.c immutably, so gate math runs
            // on scratch buffers and results are written back afterwards.
            for gate in 0..4 {
                let p = &mut pre[gate];
                p.copy_from_slice(self.params.b[gate].data());
                matvec_acc(self.params.w_x[gate].data(), d, h, x_t, p);
                matvec_acc(self.params.w_h[gate].data(), h, h, h_prev, p);
            }
            let mut c_t = vec![0.0; h];
            let mut tc_t = vec![0.0; h];
            let mut h_t = vec![0.0; h];
            for j in 0..h {
                let i = logistic(pre[GATE_INPUT][j]);
                let f = logistic(pre[GATE_FORGET][j]);
                let o = logistic(pre[GATE_OUTPUT][j]);
                let g = pre[GATE_CANDIDATE][j].tanh();
                let c = f * c_prev[j] + i * g;
                let tc = c.tanh();
                pre[GATE_INPUT][j] = i;
                pre[GATE_FORGET][j] = f;
                pre[GATE_OUTPUT][j] = o;
                pre[GATE_CANDIDATE][j] = g;
                c_t[j] = c;
                tc_t[j] = tc;
                h_t[j] = o * tc;
            }
            for gate in 0..4 {
                self.gates[gate][t * h..(t + 1) * h].copy_from_slice(&pre[gate]);
            }
            self.c[t * h..(t + 1) * h].copy_from_slice(&c_t);
            self.tanh_c[t * h..(t + 1) * h].copy_from_slice(&tc_t);
            self.h[t * h..(t + 1) * h].copy_from_slice(&h_t);
        }
        Tensor::from_vec(&[steps, h], self.h.clone())
    }

    /// BPTT over the cached run. `dh_seq` is (steps, hidden); returns the
    /// input gradient (steps, input_dim) and accumulates parameter gradients.
    pub fn backward_seq(&mut self, dh_seq: &Tensor) -> Result<Tensor> {
        let d = self.params.input_dim;
        let h = self.params.hidden_units;
        let steps = self.steps;
        if dh_seq.shape() != [steps, h] {
            return Err(Error::shape(
                "lstm_backward",
                format!("({}, {})", steps, h),
                format!("{:?}", dh_seq.shape()),
            ));
        }
        let zeros = vec![0.0; h];
        let mut dx = vec![0.0; steps * d];
        let mut dh_carry = vec![0.0; h];
        let mut dc_carry = vec![0.0; h];
        let mut dgate = [vec![0.0; h], vec![0.0; h], vec![0.0; h], vec![0.0; h]];
        for t in (0..steps).rev() {
            let x_t = &self.x[t * d..(t + 1) * d];
            let (h_prev, c_prev) = if t == 0 {
                (&zeros[..], &zeros[..])
            } else {
                (&self.h[(t - 1) * h..t * h], &self.c[(t - 1) * h..t * h])
            };
            let i = &self.gates[GATE_INPUT][t * h..(t + 1) * h];
            let f = &self.gates[GATE_FORGET][t * h..(t + 1) * h];
            let o = &self.gates[GATE_OUTPUT][t * h..(t + 1) * h];
            let g = &self.gates[GATE_CANDIDATE][t * h..(t + 1) * h];
            let tc = &self.tanh_c[t * h..(t + 1) * h];
            let dh_in = dh_seq.row(t);

            for j in 0..h {
                let dh = dh_in[j] + dh_carry[j];
                let dc = dc_carry[j] + dh * o[j] * (1.0 - tc[j] * tc[j]);
                dgate[GATE_OUTPUT][j] = dh * tc[j] * o[j] * (1.0 - o[j]);
                dgate[GATE_INPUT][j] = dc * g[j] * i[j] * (1.0 - i[j]);
                dgate[GATE_FORGET][j] = dc * c_prev[j] * f[j] * (1.0 - f[j]);
                dgate[GATE_CANDIDATE][j] = dc * i[j] * (1.0 - g[j] * g[j]);
                dc_carry[j] = dc * f[j];
            }
            dh_carry.iter_mut().for_each(|v| *v = 0.0);
            for gate in 0..4 {
                let dg = &dgate[gate];
                outer_acc(self.grads.w_x[gate].data_mut(), d, h, x_t, dg);
                outer_acc(self.grads.w_h[gate].data_mut(), h, h, h_prev, dg);
                for (b, v) in self.grads.b[gate].data_mut().iter_mut().zip(dg.iter()) {
                    *b += v;
                }
                matvec_t_acc(
                    self.params.w_x[gate].data(),
                    d,
                    h,
                    dg,
                    &mut dx[t * d..(t + 1) * d],
                );
                matvec_t_acc(self.params.w_h[gate].data(), h, h, dg, &mut dh_carry);
            }
        }
        Tensor::from_vec(&[steps, d], dx)
    }

    pub fn zero_grads(&mut self) {
        for gate in 0..4 {
            self.grads.w_x[gate].fill(0.0);
            self.grads.w_h[gate].fill(0.0);
            self.grads.b[gate].fill(0.0);
        }
    }

    /// Canonical parameter order: W_x[i,f,o,c], W_h[i,f,o,c], b[i,f,o,c].
    pub fn param_tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::with_capacity(12);
        out.extend(self.params.w_x.iter());
        out.extend(self.params.w_h.iter());
        out.extend(self.params.b.iter());
        out
    }

    pub fn grad_tensors(&self) -> Vec<&Tensor> {
        let mut out = Vec::with_capacity(12);
        out.extend(self.grads.w_x.iter());
        out.extend(self.grads.w_h.iter());
        out.extend(self.grads.b.iter());
        out
    }

    pub fn param_grad_pairs(&mut self) -> Vec<(&mut Tensor, &Tensor)> {
        let params = &mut self.params;
        let grads = &self.grads;
        params
            .w_x
            .iter_mut()
            .zip(grads.w_x.iter())
            .chain(params.w_h.iter_mut().zip(grads.w_h.iter()))
            .chain(params.b.iter_mut().zip(grads.b.iter()))
            .collect()
    }

    pub fn param_tensors_mut(&mut self) -> Vec<&mut Tensor> {
        let params = &mut self.params;
        params
            .w_x
            .iter_mut()
            .chain(params.w_h.iter_mut())
            .chain(params.b.iter_mut())
            .collect()
    }
}

/// LSTM layer. With `return_sequences` the output is (steps, hidden);
/// otherwise only the final hidden state (hidden,) is emitted.
#[derive(Debug, Clone)]
pub struct Lstm {
    pub cell: LstmCell,
    pub return_sequences: bool,
}

impl Lstm {
    pub fn new(
        input_dim: usize,
        hidden_units: usize,
        return_sequences: bool,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        Lstm {
            cell: LstmCell::new(input_dim, hidden_units, rng),
            return_sequences,
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let y = self.cell.forward_seq(x)?;
        if self.return_sequences {
            return Ok(y);
        }
        let h = self.cell.hidden_units();
        let steps = y.shape()[0];
        Ok(Tensor::vector(y.row(steps - 1)).reshaped(&[h])?)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let h = self.cell.hidden_units();
        let steps = self.cell.steps;
        if self.return_sequences {
            self.cell.backward_seq(dy)
        } else {
            if dy.shape() != [h] {
                return Err(Error::shape(
                    "lstm_backward",
                    format!("({},)", h),
                    format!("{:?}", dy.shape()),
                ));
            }
            let mut dh_seq = Tensor::zeros(&[steps, h]);
            dh_seq.data_mut()[(steps - 1) * h..].copy_from_slice(dy.data());
            self.cell.backward_seq(&dh_seq)
        }
    }
}

/// Bidirectional LSTM: a forward pass over the sequence and a second pass
/// over the reversed sequence, concatenated per timestep into (steps, 2·hidden).
#[derive(Debug, Clone)]
pub struct BiLstm {
    pub fwd: LstmCell,
    pub bwd: LstmCell,
}

impl BiLstm {
    pub fn new(input_dim: usize, hidden_units: usize, rng: &mut ChaCha8Rng) -> Self {
        BiLstm {
            fwd: LstmCell::new(input_dim, hidden_units, rng),
            bwd: LstmCell::new(input_dim, hidden_units, rng),
        }
    }

    pub fn forward(&mut self, x: &Tensor) -> Result<Tensor> {
        let shape = x.shape();
        if shape.len() != 2 {
            return Err(Error::shape("bilstm_forward", "(steps, features)", format!("{:?}", shape)));
        }
        let (steps, d) = (shape[0], shape[1]);
        let h = self.fwd.hidden_units();
        let yf = self.fwd.forward_seq(x)?;
        let xr = reverse_rows(x.data(), steps, d);
        let yb = self.bwd.forward_seq(&Tensor::from_vec(&[steps, d], xr)?)?;
        let mut out = vec![0.0; steps * 2 * h];
        for t in 0..steps {
            out[t * 2 * h..t * 2 * h + h].copy_from_slice(yf.row(t));
            // Row steps-1-t of the reversed pass lines up with timestep t.
            out[t * 2 * h + h..(t + 1) * 2 * h].copy_from_slice(yb.row(steps - 1 - t));
        }
        Tensor::from_vec(&[steps, 2 * h], out)
    }

    pub fn backward(&mut self, dy: &Tensor) -> Result<Tensor> {
        let h = self.fwd.hidden_units();
        let steps = self.fwd.steps;
        if dy.shape() != [steps, 2 * h] {
            return Err(Error::shape(
                "bilstm_backward",
                format!("({}, {})", steps, 2 * h),
                format!("{:?}", dy.shape()),
            ));
        }
        let mut dyf = vec![0.0; steps * h];
        let mut dyb = vec![0.0; steps * h];
        for t in 0..steps {
            dyf[t * h..(t + 1) * h].copy_from_slice(&dy.row(t)[..h]);
            dyb[(steps - 1 - t) * h..(steps - t) * h].copy_from_slice(&dy.row(t)[h..]);
        }
        let d = self.fwd.params.input_dim;
        let dxf = self.fwd.backward_seq(&Tensor::from_vec(&[steps, h], dyf)?)?;
        let dxb = self.bwd.backward_seq(&Tensor::from_vec(&[steps, h], dyb)?)?;
        let mut dx = dxf.into_data();
        let dxb = dxb.data();
        for t in 0..steps {
            let rev = steps - 1 - t;
            for k in 0..d {
                dx[t * d + k] += dxb[rev * d + k];
            }
        }
        Tensor::from_vec(&[steps, d], dx)
    }
}

fn reverse_rows(data: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; rows * cols];
    for r in 0..rows {
        out[r * cols..(r + 1) * cols]
            .copy_from_slice(&data[(rows - 1 - r) * cols..(rows - r) * cols]);
    }
    out
}
