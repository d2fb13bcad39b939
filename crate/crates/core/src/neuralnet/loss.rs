//! Mean squared error loss.

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// (1/n) Σ (yᵢ - ŷᵢ)²
pub fn mse(y: &Tensor, y_hat: &Tensor) -> Result<f64> {
    if y.shape() != y_hat.shape() {
        return Err(Error::shape(
            "mse",
            format!("{:?}", y.shape()),
            format!("{:?}", y_hat.shape()),
        ));
    }
    let n = y.len() as f64;
    let sum: f64 = y
        .data()
        .iter()
        .zip(y_hat.data().iter())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / n)
}

/// Gradient of `mse` with respect to the prediction: (2/n)(ŷ - y).
pub fn mse_grad(y: &Tensor, y_hat: &Tensor) -> Result<Tensor> {
    if y.shape() != y_hat.shape() {
        return Err(Error::shape(
            "mse_grad",
            format!("{:?}", y.shape()),
            format!("{:?}", y_hat.shape()),
        ));
    }
    let n = y.len() as f64;
    let data: Vec<f64> = y
        .data()
        .iter()
        .zip(y_hat.data().iter())
        .map(|(a, b)| 2.0 * (b - a) / n)
        .collect();
    Tensor::from_vec(y.shape(), data)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_when_equal() {
        let y = Tensor::vector(&[1.0, -2.0, 3.5]);
        assert_eq!(mse(&y, &y).unwrap(), 0.0);
    }

    #[test]
    fn hand_example() {
        let y = Tensor::vector(&[1.0, 2.0]);
        let y_hat = Tensor::vector(&[0.0, 0.0]);
        assert_eq!(mse(&y, &y_hat).unwrap(), 2.5);
    }

    #[test]
    fn grad_matches_finite_difference() {
        let y = Tensor::vector(&[0.3, -1.2, 0.9]);
        let y_hat = Tensor::vector(&[0.1, 0.4, -0.5]);
        let grad = mse_grad(&y, &y_hat).unwrap();
        let eps = 1e-7;
        for k in 0..3 {
            let mut plus = y_hat.clone();
            plus.data_mut()[k] += eps;
            let mut minus = y_hat.clone();
            minus.data_mut()[k] -= eps;
            let fd = (mse(&y, &plus).unwrap() - mse(&y, &minus).unwrap()) / (2.0 * eps);
            assert!((fd - grad.data()[k]).abs() < 1e-6);
        }
    }

    #[test]
    fn shape_mismatch_is_an_error() {
        let y = Tensor::vector(&[1.0, 2.0]);
        let y_hat = Tensor::vector(&[1.0]);
        assert!(mse(&y, &y_hat).is_err());
    }
}
