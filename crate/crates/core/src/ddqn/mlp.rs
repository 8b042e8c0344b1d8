use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Dense layer; `weights` is row-major `[out][in]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

/// Fully connected network with rectifier hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpParams {
    pub layer_sizes: Vec<usize>,
    pub layers: Vec<Layer>,
}

impl MlpParams {
    /// Glorot-uniform weights, zero biases.
    pub fn init<R: Rng + ?Sized>(layer_sizes: &[usize], rng: &mut R) -> Self {
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
                Layer {
                    weights: (0..fan_in * fan_out)
                        .map(|_| rng.random_range(-limit..=limit))
                        .collect(),
                    biases: vec![0.0; fan_out],
                }
            })
            .collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        }
    }

    pub fn zeros(layer_sizes: &[usize]) -> Self {
        let layers = layer_sizes
            .windows(2)
            .map(|w| Layer {
                weights: vec![0.0; w[0] * w[1]],
                biases: vec![0.0; w[1]],
            })
            .collect();
        Self {
            layer_sizes: layer_sizes.to_vec(),
            layers,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("at least one layer")
    }

    pub fn n_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.biases.len())
            .sum()
    }

    pub fn params(&self) -> impl Iterator<Item = &f64> {
        self.layers
            .iter()
            .flat_map(|l| l.weights.iter().chain(&l.biases))
    }

    pub fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.layers
            .iter_mut()
            .flat_map(|l| l.weights.iter_mut().chain(l.biases.iter_mut()))
    }

    /// Checks layer shapes against `layer_sizes` and that every value is finite.
    pub fn check(&self) -> Result<()> {
        if self.layer_sizes.len() < 2 || self.layers.len() != self.layer_sizes.len() - 1 {
            return Err(Error::DimensionMismatch {
                context: "layer count",
                expected: self.layer_sizes.len().saturating_sub(1),
                actual: self.layers.len(),
            });
        }
        for (l, w) in self.layers.iter().zip(self.layer_sizes.windows(2)) {
            if l.weights.len() != w[0] * w[1] {
                return Err(Error::DimensionMismatch {
                    context: "weight matrix",
                    expected: w[0] * w[1],
                    actual: l.weights.len(),
                });
            }
            if l.biases.len() != w[1] {
                return Err(Error::DimensionMismatch {
                    context: "bias vector",
                    expected: w[1],
                    actual: l.biases.len(),
                });
            }
        }
        if !self.params().all(|x| x.is_finite()) {
            return Err(Error::InvalidParameter {
                name: "mlp",
                reason: "non-finite parameter".into(),
            });
        }
        Ok(())
    }

    fn check_input(&self, state: &[f64]) -> Result<()> {
        if state.len() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                context: "network input",
                expected: self.input_dim(),
                actual: state.len(),
            });
        }
        Ok(())
    }

    pub fn forward(&self, state: &[f64]) -> Result<Vec<f64>> {
        self.check_input(state)?;
        Ok(self.activations(state).pop().expect("output layer"))
    }

    /// Post-activation values of every layer, input included.
    fn activations(&self, state: &[f64]) -> Vec<Vec<f64>> {
        let last = self.layers.len() - 1;
        let mut acts = Vec::with_capacity(self.layers.len() + 1);
        acts.push(state.to_vec());
        for (k, layer) in self.layers.iter().enumerate() {
            let x = &acts[k];
            let n_in = x.len();
            let mut y: Vec<f64> = layer
                .biases
                .iter()
                .enumerate()
                .map(|(o, b)| {
                    b + layer.weights[o * n_in..(o + 1) * n_in]
                        .iter()
                        .zip(x)
                        .map(|(w, v)| w * v)
                        .sum::<f64>()
                })
                .collect();
            if k != last {
                y.iter_mut().for_each(|v| *v = v.max(0.0));
            }
            acts.push(y);
        }
        acts
    }

    /// Mean squared TD error over the batch and its gradient with respect to
    /// every parameter. Only the taken action's output receives error.
    pub fn loss_and_grad(
        &self,
        states: &[&[f64]],
        actions: &[usize],
        targets: &[f64],
    ) -> Result<(f64, MlpParams)> {
        let n = states.len();
        if actions.len() != n || targets.len() != n {
            return Err(Error::DimensionMismatch {
                context: "batch",
                expected: n,
                actual: actions.len().min(targets.len()),
            });
        }
        if n == 0 {
            return Err(Error::Empty("training batch"));
        }
        let mut grad = MlpParams::zeros(&self.layer_sizes);
        let mut loss = 0.0;
        let out_dim = self.output_dim();
        for ((state, &action), &y) in states.iter().zip(actions).zip(targets) {
            self.check_input(state)?;
            if action >= out_dim {
                return Err(Error::DimensionMismatch {
                    context: "action index",
                    expected: out_dim,
                    actual: action,
                });
            }
            let acts = self.activations(state);
            let q = acts.last().expect("output")[action];
            let err = q - y;
            loss += err * err;

            let mut delta = vec![0.0; out_dim];
            delta[action] = 2.0 * err / n as f64;
            for k in (0..self.layers.len()).rev() {
                let x = &acts[k];
                let n_in = x.len();
                let g = &mut grad.layers[k];
                for (o, d) in delta.iter().enumerate() {
                    if *d == 0.0 {
                        continue;
                    }
                    g.biases[o] += d;
                    for (gw, v) in g.weights[o * n_in..(o + 1) * n_in].iter_mut().zip(x) {
                        *gw += d * v;
                    }
                }
                if k == 0 {
                    break;
                }
                let w = &self.layers[k].weights;
                // Back through the rectifier of layer k-1: its output is x.
                delta = (0..n_in)
                    .map(|i| {
                        if x[i] <= 0.0 {
                            0.0
                        } else {
                            delta
                                .iter()
                                .enumerate()
                                .map(|(o, d)| d * w[o * n_in + i])
                                .sum()
                        }
                    })
                    .collect();
            }
        }
        Ok((loss / n as f64, grad))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_network_outputs_zero() {
        let net = MlpParams::zeros(&[3, 4, 2]);
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn hand_forward_pass() {
        // 2 -> 2 -> 1: hidden = relu([x0 + x1 - 1, -x0]), out = 2 h0 + 3 h1 + 0.5
        let net = MlpParams {
            layer_sizes: vec![2, 2, 1],
            layers: vec![
                Layer {
                    weights: vec![1.0, 1.0, -1.0, 0.0],
                    biases: vec![-1.0, 0.0],
                },
                Layer {
                    weights: vec![2.0, 3.0],
                    biases: vec![0.5],
                },
            ],
        };
        // x = (2, 1): h = (2, 0) -> 4.5
        assert_eq!(net.forward(&[2.0, 1.0]).unwrap(), vec![4.5]);
        // x = (-1, 0.5): h = (0, 1) -> 3.5; first unit's negative pre-activation is dropped
        assert_eq!(net.forward(&[-1.0, 0.5]).unwrap(), vec![3.5]);
    }

    #[test]
    fn dimension_mismatch_is_error() {
        let net = MlpParams::zeros(&[3, 2]);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::DimensionMismatch {
                expected: 3,
                actual: 1,
                ..
            })
        ));
    }

    #[test]
    fn init_shapes_and_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = MlpParams::init(&[11, 64, 32, 32, 5], &mut rng);
        net.check().unwrap();
        assert_eq!(
            net.n_params(),
            11 * 64 + 64 + 64 * 32 + 32 + 32 * 32 + 32 + 32 * 5 + 5
        );
        let limit = (6.0f64 / 75.0).sqrt();
        assert!(net.layers[0].weights.iter().all(|w| w.abs() <= limit));
        assert!(net
            .layers
            .iter()
            .all(|l| l.biases.iter().all(|&b| b == 0.0)));
    }
}
