//! Central finite-difference verification of analytic gradients.

use crate::error::Result;

use super::layer::Mode;
use super::loss::{mse, mse_grad};
use super::network::Network;
use super::tensor::Tensor;

/// Relative error between an analytic and a numerical gradient entry. The
/// denominator floor keeps near-zero gradients from amplifying rounding
/// noise in the difference quotient.
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-4)
}

/// Compares every analytic parameter gradient of `mse(target, net(input))`
/// against central finite differences and returns the worst relative error.
///
/// Intended for small networks; the cost is two forward passes per parameter.
pub fn gradient_check(
    net: &mut Network,
    input: &Tensor,
    target: &Tensor,
    epsilon: f64,
) -> Result<f64> {
    // Analytic gradients via one forward/backward pass (dropout inert).
    net.zero_grads();
    let out = net.forward(input, Mode::Infer)?;
    let dy = mse_grad(target, &out)?;
    net.backward(&dy)?;
    let analytic: Vec<Vec<f64>> = net
        .layers
        .iter()
        .flat_map(|l| l.grads())
        .map(|g| g.data().to_vec())
        .collect();

    let mut worst = 0.0f64;
    let num_tensors = analytic.len();
    for tensor_idx in 0..num_tensors {
        for k in 0..analytic[tensor_idx].len() {
            let probe = |net: &mut Network, delta: f64| -> Result<f64> {
                {
                    let mut params: Vec<&mut Tensor> =
                        net.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
                    params[tensor_idx].data_mut()[k] += delta;
                }
                let out = net.forward(input, Mode::Infer)?;
                let loss = mse(target, &out)?;
                {
                    let mut params: Vec<&mut Tensor> =
                        net.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
                    params[tensor_idx].data_mut()[k] -= delta;
                }
                Ok(loss)
            };
            let plus = probe(net, epsilon)?;
            let minus = probe(net, -epsilon)?;
            let numeric = (plus - minus) / (2.0 * epsilon);
            worst = worst.max(relative_error(analytic[tensor_idx][k], numeric));
        }
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neuralnet::activation::Activation;
    use crate::neuralnet::layer::Dense;
    use crate::neuralnet::network::Layer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small_net(seed: u64) -> Network {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Network::new(vec![
            Layer::Dense(Dense::new(3, 4, Activation::Tanh, &mut rng)),
            Layer::Dense(Dense::new(4, 1, Activation::Identity, &mut rng)),
        ])
    }

    #[test]
    fn correct_gradients_pass() {
        let mut net = small_net(11);
        let x = Tensor::vector(&[0.2, -0.5, 0.9]);
        let y = Tensor::vector(&[0.3]);
        let err = gradient_check(&mut net, &x, &y, 1e-5).unwrap();
        assert!(err < 1e-4, "relative error {err}");
    }

    #[test]
    fn corrupted_gradient_is_detected() {
        // A deliberately wrong backward: scale the weight after computing
        // analytic gradients so the finite differences disagree.
        let mut net = small_net(12);
        let x = Tensor::vector(&[0.2, -0.5, 0.9]);
        let y = Tensor::vector(&[0.3]);

        net.zero_grads();
        let out = net.forward(&x, Mode::Infer).unwrap();
        let dy = mse_grad(&y, &out).unwrap();
        net.backward(&dy).unwrap();

        // Corrupt: double every analytic gradient by running backward twice.
        net.backward(&dy).unwrap();
        let analytic: Vec<f64> = net
            .layers
            .iter()
            .flat_map(|l| l.grads())
            .flat_map(|g| g.data().to_vec())
            .collect();

        // Numeric gradient of the first weight.
        let eps = 1e-5;
        let probe = |net: &mut Network, delta: f64| {
            {
                let mut params: Vec<&mut Tensor> =
                    net.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
                params[0].data_mut()[0] += delta;
            }
            let out = net.forward(&x, Mode::Infer).unwrap();
            let loss = mse(&y, &out).unwrap();
            {
                let mut params: Vec<&mut Tensor> =
                    net.layers.iter_mut().flat_map(|l| l.params_mut()).collect();
                params[0].data_mut()[0] -= delta;
            }
            loss
        };
        let numeric = (probe(&mut net, eps) - probe(&mut net, -eps)) / (2.0 * eps);
        let err = relative_error(analytic[0], numeric);
        assert!(err > 1e-2, "corruption went unnoticed: {err}");
    }

    #[test]
    fn stable_under_epsilon_halving() {
        let mut net = small_net(13);
        let x = Tensor::vector(&[0.7, 0.1, -0.3]);
        let y = Tensor::vector(&[-0.2]);
        let e1 = gradient_check(&mut net, &x, &y, 1e-5).unwrap();
        let e2 = gradient_check(&mut net, &x, &y, 5e-6).unwrap();
        assert!(e1 < 1e-4 && e2 < 1e-4, "e1={e1} e2={e2}");
    }
}
