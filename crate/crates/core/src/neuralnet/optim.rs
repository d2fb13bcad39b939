//! Adam optimizer with bias-corrected moment estimates.

use crate::error::{Error, Result};

use super::tensor::Tensor;

#[derive(Debug, Clone)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    m: Vec<Vec<f64>>,
    v: Vec<Vec<f64>>,
    step: u64,
}

impl Adam {
    pub fn new(learning_rate: f64) -> Self {
        Adam {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            m: Vec::new(),
            v: Vec::new(),
            step: 0,
        }
    }

    /// Applies one update to every (parameter, gradient) pair. `grad_scale`
    /// multiplies each gradient before use (mini-batch averaging).
    pub fn step(&mut self, pairs: &mut [(&mut Tensor, &Tensor)], grad_scale: f64) -> Result<()> {
        if self.m.is_empty() {
            self.m = pairs.iter().map(|(p, _)| vec![0.0; p.len()]).collect();
            self.v = self.m.clone();
        }
        if self.m.len() != pairs.len() {
            return Err(Error::shape(
                "adam_step",
                format!("{} parameter tensors", self.m.len()),
                format!("{}", pairs.len()),
            ));
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        for (idx, (param, grad)) in pairs.iter_mut().enumerate() {
            if param.len() != grad.len() {
                return Err(Error::shape(
                    "adam_step",
                    format!("{:?}", param.shape()),
                    format!("{:?}", grad.shape()),
                ));
            }
            let m = &mut self.m[idx];
            let v = &mut self.v[idx];
            for ((p, g), (mi, vi)) in param
                .data_mut()
                .iter_mut()
                .zip(grad.data().iter())
                .zip(m.iter_mut().zip(v.iter_mut()))
            {
                let g = g * grad_scale;
                *mi = self.beta1 * *mi + (1.0 - self.beta1) * g;
                *vi = self.beta2 * *vi + (1.0 - self.beta2) * g * g;
                let m_hat = *mi / bc1;
                let v_hat = *vi / bc2;
                *p -= self.learning_rate * m_hat / (v_hat.sqrt() + self.epsilon);
            }
        }
        Ok(())
    }
}
