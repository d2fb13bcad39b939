//! Dense row-major tensor, the currency of the neural engine.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Result<Self> {
        let expected: usize = shape.iter().product();
        if data.len() != expected {
            return Err(Error::shape(
                "tensor_from_vec",
                format!("{} values for shape {:?}", expected, shape),
                format!("{} values", data.len()),
            ));
        }
        Ok(Tensor {
            shape: shape.to_vec(),
            data,
        })
    }

    /// 1-D tensor from a slice.
    pub fn vector(values: &[f64]) -> Self {
        Tensor {
            shape: vec![values.len()],
            data: values.to_vec(),
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Reinterprets the buffer under a new shape of equal volume.
    pub fn reshaped(&self, shape: &[usize]) -> Result<Tensor> {
        Tensor::from_vec(shape, self.data.clone())
    }

    /// Row `r` of a rank-2 tensor.
    pub fn row(&self, r: usize) -> &[f64] {
        debug_assert_eq!(self.shape.len(), 2);
        let cols = self.shape[1];
        &self.data[r * cols..(r + 1) * cols]
    }

    pub fn fill(&mut self, value: f64) {
        self.data.iter_mut().for_each(|v| *v = value);
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }

    /// self += other, shapes must match exactly.
    pub fn add_assign(&mut self, other: &Tensor) -> Result<()> {
        if self.shape != other.shape {
            return Err(Error::shape(
                "tensor_add",
                format!("{:?}", self.shape),
                format!("{:?}", other.shape),
            ));
        }
        for (a, b) in self.data.iter_mut().zip(other.data.iter()) {
            *a += *b;
        }
        Ok(())
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

// Flat-slice matrix kernels shared by the layers. Weights are row-major
// (rows × cols); loops run over contiguous rows so they vectorize.

/// out[j] += Σ_i x[i] · w[i, j]
pub(crate) fn matvec_acc(w: &[f64], rows: usize, cols: usize, x: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(x.len(), rows);
    debug_assert_eq!(out.len(), cols);
    for (xi, w_row) in x.iter().zip(w.chunks_exact(cols)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(w_row.iter()) {
            *o += xi * wv;
        }
    }
}

/// out[i] += Σ_j w[i, j] · dy[j]  (multiplication by the transpose)
pub(crate) fn matvec_t_acc(w: &[f64], rows: usize, cols: usize, dy: &[f64], out: &mut [f64]) {
    debug_assert_eq!(w.len(), rows * cols);
    debug_assert_eq!(dy.len(), cols);
    debug_assert_eq!(out.len(), rows);
    for (o, w_row) in out.iter_mut().zip(w.chunks_exact(cols)) {
        let mut acc = 0.0;
        for (wv, d) in w_row.iter().zip(dy.iter()) {
            acc += wv * d;
        }
        *o += acc;
    }
}

/// dw[i, j] += x[i] · dy[j]
pub(crate) fn outer_acc(dw: &mut [f64], rows: usize, cols: usize, x: &[f64], dy: &[f64]) {
    debug_assert_eq!(dw.len(), rows * cols);
    debug_assert_eq!(x.len(), rows);
    debug_assert_eq!(dy.len(), cols);
    for (xi, dw_row) in x.iter().zip(dw.chunks_exact_mut(cols)) {
        if *xi == 0.0 {
            continue;
        }
        for (d, g) in dw_row.iter_mut().zip(dy.iter()) {
            *d += xi * g;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_volume() {
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 6]).is_ok());
        assert!(Tensor::from_vec(&[2, 3], vec![0.0; 5]).is_err());
    }

    #[test]
    fn matvec_matches_hand_computation() {
        // [1 2; 3 4] with x = [5, 6]: y = [5+18, 10+24] = [23, 34]
        let w = [1.0, 2.0, 3.0, 4.0];
        let x = [5.0, 6.0];
        let mut y = [0.0, 0.0];
        matvec_acc(&w, 2, 2, &x, &mut y);
        assert_eq!(y, [23.0, 34.0]);

        let mut back = [0.0, 0.0];
        matvec_t_acc(&w, 2, 2, &[1.0, 1.0], &mut back);
        assert_eq!(back, [3.0, 7.0]);
    }

    #[test]
    fn outer_accumulates() {
        let mut dw = [0.0; 4];
        outer_acc(&mut dw, 2, 2, &[1.0, 2.0], &[3.0, 4.0]);
        assert_eq!(dw, [3.0, 4.0, 6.0, 8.0]);
    }
}
