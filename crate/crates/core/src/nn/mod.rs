//! Small dense feed-forward networks with analytic backpropagation.
//!
//! Batches are row-major: one sample per row. Weights are stored as
//! `(fan_in, fan_out)` so a layer computes `act(x · W + b)`.

mod checkpoint;
mod optim;

pub use checkpoint::{read_checkpoint, write_checkpoint};
pub use optim::{clip_gradients, global_norm, soft_update, Adam, AdamConfig, Parameters};

use ndarray::linalg::general_mat_mul;
use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Tanh,
    Linear,
}

impl Activation {
    #[inline]
    fn apply(self, z: f64) -> f64 {
        match self {
            Activation::Relu => z.max(0.0),
            Activation::Tanh => z.tanh(),
            Activation::Linear => z,
        }
    }

    /// Derivative expressed through the activation's output. ReLU uses the
    /// subgradient 0 at the kink.
    #[inline]
    fn derivative_from_output(self, y: f64) -> f64 {
        match self {
            Activation::Relu => {
                if y > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - y * y,
            Activation::Linear => 1.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Activation::Relu => "relu",
            Activation::Tanh => "tanh",
            Activation::Linear => "linear",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "relu" => Some(Activation::Relu),
            "tanh" => Some(Activation::Tanh),
            "linear" => Some(Activation::Linear),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
}

impl Dense {
    pub fn zeros(fan_in: usize, fan_out: usize, activation: Activation) -> Self {
        Self {
            weights: Array2::zeros((fan_in, fan_out)),
            bias: Array1::zeros(fan_out),
            activation,
        }
    }

    /// Uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`, biases included.
    pub fn uniform<R: Rng + ?Sized>(
        fan_in: usize,
        fan_out: usize,
        activation: Activation,
        rng: &mut R,
    ) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let mut layer = Self::zeros(fan_in, fan_out, activation);
        layer
            .weights
            .mapv_inplace(|_| rng.random_range(-bound..=bound));
        layer.bias.mapv_inplace(|_| rng.random_range(-bound..=bound));
        layer
    }

    pub fn fan_in(&self) -> usize {
        self.weights.nrows()
    }

    pub fn fan_out(&self) -> usize {
        self.weights.ncols()
    }
}

/// Parameters of a feed-forward network.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    layers: Vec<Dense>,
}

/// Per-layer activations retained by a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    /// `activations[0]` is the input, `activations[l + 1]` the output of layer `l`.
    activations: Vec<Array2<f64>>,
}

impl ForwardCache {
    pub fn output(&self) -> &Array2<f64> {
        self.activations.last().expect("cache holds at least the input")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DenseGrad {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Gradients congruent with a [`Network`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients {
    pub layers: Vec<DenseGrad>,
}

impl Network {
    /// Builds a network from layer widths `[in, h1, ..., out]`, with
    /// `hidden` activations and `output` on the final layer.
    pub fn new<R: Rng + ?Sized>(
        sizes: &[usize],
        hidden: Activation,
        output: Activation,
        rng: &mut R,
    ) -> Self {
        assert!(sizes.len() >= 2, "a network needs an input and an output width");
        let n = sizes.len() - 1;
        let layers = (0..n)
            .map(|i| {
                let act = if i + 1 == n { output } else { hidden };
                Dense::uniform(sizes[i], sizes[i + 1], act, rng)
            })
            .collect();
        Self { layers }
    }

    pub fn from_layers(layers: Vec<Dense>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Config("a network needs at least one layer".into()));
        }
        for pair in layers.windows(2) {
            if pair[0].fan_out() != pair[1].fan_in() {
                return Err(Error::Dimension {
                    expected: pair[0].fan_out(),
                    actual: pair[1].fan_in(),
                });
            }
        }
        for l in &layers {
            if l.bias.len() != l.fan_out() {
                return Err(Error::Dimension {
                    expected: l.fan_out(),
                    actual: l.bias.len(),
                });
            }
        }
        Ok(Self { layers })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out()
    }

    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Multiplies the last layer's parameters by `factor`.
    pub fn scale_output_layer(&mut self, factor: f64) {
        let last = self.layers.last_mut().expect("non-empty");
        last.weights *= factor;
        last.bias *= factor;
    }

    pub fn zero_gradients(&self) -> Gradients {
        Gradients {
            layers: self
                .layers
                .iter()
                .map(|l| DenseGrad {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect(),
        }
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::Dimension {
                expected: self.input_dim(),
                actual: width,
            });
        }
        Ok(())
    }

    /// Single-sample evaluation.
    pub fn forward(&self, input: &[f64]) -> Result<Vec<f64>> {
        self.check_input(input.len())?;
        let x = ArrayView2::from_shape((1, input.len()), input).expect("contiguous row");
        Ok(self.forward_batch(x)?.into_raw_vec_and_offset().0)
    }

    pub fn forward_batch(&self, input: ArrayView2<f64>) -> Result<Array2<f64>> {
        self.check_input(input.ncols())?;
        let mut x = input.to_owned();
        for layer in &self.layers {
            x = affine(&x, layer);
        }
        Ok(x)
    }

    pub fn forward_cached(&self, input: Array2<f64>) -> Result<ForwardCache> {
        self.check_input(input.ncols())?;
        let mut activations = Vec::with_capacity(self.layers.len() + 1);
        activations.push(input);
        for layer in &self.layers {
            let next = affine(activations.last().expect("non-empty"), layer);
            activations.push(next);
        }
        Ok(ForwardCache { activations })
    }

    /// Gradients of `sum(output ⊙ upstream)` with respect to every parameter
    /// and to the input, summed over the batch.
    pub fn backward(
        &self,
        cache: &ForwardCache,
        upstream: ArrayView2<f64>,
    ) -> Result<(Gradients, Array2<f64>)> {
        let out = cache.output();
        if upstream.dim() != out.dim() {
            return Err(Error::Dimension {
                expected: out.len(),
                actual: upstream.len(),
            });
        }
        let mut grads = Vec::with_capacity(self.layers.len());
        let mut delta_up = upstream.to_owned();
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let y = &cache.activations[l + 1];
            let act = layer.activation;
            let mut delta = delta_up;
            ndarray::Zip::from(&mut delta)
                .and(y)
                .for_each(|d, &yv| *d *= act.derivative_from_output(yv));
            let x = &cache.activations[l];
            let mut gw = Array2::zeros(layer.weights.raw_dim());
            general_mat_mul(1.0, &x.t(), &delta, 0.0, &mut gw);
            let gb = delta.sum_axis(Axis(0));
            delta_up = delta.dot(&layer.weights.t());
            grads.push(DenseGrad {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        Ok((Gradients { layers: grads }, delta_up))
    }
}

fn affine(x: &Array2<f64>, layer: &Dense) -> Array2<f64> {
    let mut z = x.dot(&layer.weights);
    z += &layer.bias;
    let act = layer.activation;
    if act != Activation::Linear {
        z.mapv_inplace(|v| act.apply(v));
    }
    z
}

impl Gradients {
    pub fn scale(&mut self, factor: f64) {
        for g in &mut self.layers {
            g.weights *= factor;
            g.bias *= factor;
        }
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices()
            .iter()
            .all(|s| s.iter().all(|v| v.is_finite()))
    }
}

impl Parameters for Network {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

impl Parameters for Gradients {
    fn param_slices(&self) -> Vec<&[f64]> {
        self.layers
            .iter()
            .flat_map(|l| {
                [
                    l.weights.as_slice().expect("standard layout"),
                    l.bias.as_slice().expect("standard layout"),
                ]
            })
            .collect()
    }

    fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers
            .iter_mut()
            .flat_map(|l| {
                [
                    l.weights.as_slice_mut().expect("standard layout"),
                    l.bias.as_slice_mut().expect("standard layout"),
                ]
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Plain nested-loop evaluation, independent of the ndarray path.
    fn reference_forward(net: &Network, input: &[f64]) -> Vec<f64> {
        let mut x = input.to_vec();
        for layer in net.layers() {
            let mut y = vec![0.0; layer.fan_out()];
            for (j, yj) in y.iter_mut().enumerate() {
                let mut acc = layer.bias[j];
                for (i, xi) in x.iter().enumerate() {
                    acc += xi * layer.weights[[i, j]];
                }
                *yj = match layer.activation {
                    Activation::Relu => acc.max(0.0),
                    Activation::Tanh => acc.tanh(),
                    Activation::Linear => acc,
                };
            }
            x = y;
        }
        x
    }

    fn random_net(rng: &mut ChaCha8Rng, sizes: &[usize], out: Activation) -> Network {
        Network::new(sizes, Activation::Tanh, out, rng)
    }

    #[test]
    fn zero_net_outputs_zero() {
        let net = Network::from_layers(vec![
            Dense::zeros(3, 4, Activation::Relu),
            Dense::zeros(4, 2, Activation::Linear),
        ])
        .unwrap();
        assert_eq!(net.forward(&[1.0, -2.0, 3.0]).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn tanh_identity_at_zero() {
        let mut layer = Dense::zeros(1, 1, Activation::Tanh);
        layer.weights[[0, 0]] = 1.0;
        let net = Network::from_layers(vec![layer]).unwrap();
        assert_eq!(net.forward(&[0.0]).unwrap(), vec![0.0]);
    }

    #[test]
    fn forward_matches_reference_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            let net = Network::new(&[5, 7, 6, 3], Activation::Relu, Activation::Tanh, &mut rng);
            let x: Vec<f64> = (0..5).map(|_| rng.random_range(-2.0..2.0)).collect();
            let a = net.forward(&x).unwrap();
            let b = reference_forward(&net, &x);
            for (u, v) in a.iter().zip(&b) {
                assert!((u - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let net = random_net(&mut rng, &[3, 2], Activation::Linear);
        assert!(matches!(
            net.forward(&[1.0]),
            Err(Error::Dimension {
                expected: 3,
                actual: 1
            })
        ));
        let layers = vec![
            Dense::zeros(3, 4, Activation::Relu),
            Dense::zeros(5, 1, Activation::Linear),
        ];
        assert!(Network::from_layers(layers).is_err());
    }

    #[test]
    fn linear_neuron_gradient() {
        let mut layer = Dense::zeros(1, 1, Activation::Linear);
        layer.weights[[0, 0]] = 0.7;
        layer.bias[0] = -0.2;
        let net = Network::from_layers(vec![layer]).unwrap();
        let cache = net.forward_cached(array![[1.5]]).unwrap();
        let (g, gx) = net.backward(&cache, array![[1.0]].view()).unwrap();
        assert_eq!(g.layers[0].weights[[0, 0]], 1.5);
        assert_eq!(g.layers[0].bias[0], 1.0);
        assert_eq!(gx[[0, 0]], 0.7);
    }

    #[test]
    fn relu_kink_uses_zero_subgradient() {
        let mut layer = Dense::zeros(1, 1, Activation::Relu);
        layer.weights[[0, 0]] = 1.0;
        let net = Network::from_layers(vec![layer]).unwrap();
        let cache = net.forward_cached(array![[0.0]]).unwrap();
        let (g, gx) = net.backward(&cache, array![[1.0]].view()).unwrap();
        assert_eq!(g.layers[0].weights[[0, 0]], 0.0);
        assert_eq!(g.layers[0].bias[0], 0.0);
        assert_eq!(gx[[0, 0]], 0.0);
    }

    #[test]
    fn forward_and_backward_are_pure() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = Network::new(&[4, 8, 2], Activation::Relu, Activation::Linear, &mut rng);
        let x = Array2::from_shape_fn((5, 4), |(i, j)| (i as f64 - j as f64) * 0.3);
        let up = Array2::from_elem((5, 2), 0.5);
        let c1 = net.forward_cached(x.clone()).unwrap();
        let c2 = net.forward_cached(x).unwrap();
        assert_eq!(c1.output(), c2.output());
        assert_eq!(
            net.backward(&c1, up.view()).unwrap(),
            net.backward(&c2, up.view()).unwrap()
        );
    }

    #[test]
    fn batched_gradient_is_sum_of_samples() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let net = Network::new(&[3, 5, 2], Activation::Tanh, Activation::Linear, &mut rng);
        let x = Array2::from_shape_fn((4, 3), |_| rng.random_range(-1.0..1.0));
        let up = Array2::from_shape_fn((4, 2), |_| rng.random_range(-1.0..1.0));
        let (whole, _) = net
            .backward(&net.forward_cached(x.clone()).unwrap(), up.view())
            .unwrap();
        let mut summed = net.zero_gradients();
        for i in 0..4 {
            let xi = x.slice(ndarray::s![i..i + 1, ..]).to_owned();
            let ui = up.slice(ndarray::s![i..i + 1, ..]);
            let (g, _) = net.backward(&net.forward_cached(xi).unwrap(), ui).unwrap();
            for (s, gl) in summed.layers.iter_mut().zip(&g.layers) {
                s.weights += &gl.weights;
                s.bias += &gl.bias;
            }
        }
        for (a, b) in whole.layers.iter().zip(&summed.layers) {
            assert!((&a.weights - &b.weights).iter().all(|v| v.abs() < 1e-12));
            assert!((&a.bias - &b.bias).iter().all(|v| v.abs() < 1e-12));
        }
    }
}
