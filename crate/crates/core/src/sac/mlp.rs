use nalgebra::{DMatrix, DVector};
use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Fully connected layer `y = W x + b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Linear {
    pub weight: DMatrix<f64>,
    pub bias: DVector<f64>,
}

impl Linear {
    /// Uniform `±1/√fan_in` initialization, weights and bias alike.
    pub fn new(fan_in: usize, fan_out: usize, rng: &mut dyn RngCore) -> Self {
        let bound = 1.0 / (fan_in as f64).sqrt();
        let weight = DMatrix::from_fn(fan_out, fan_in, |_, _| rng.random_range(-bound..bound));
        let bias = DVector::from_fn(fan_out, |_, _| rng.random_range(-bound..bound));
        Linear { weight, bias }
    }

    fn zeros_like(&self) -> Self {
        Linear {
            weight: DMatrix::zeros(self.weight.nrows(), self.weight.ncols()),
            bias: DVector::zeros(self.bias.len()),
        }
    }
}

/// Multilayer perceptron with ReLU hidden layers and a linear output.
/// Batches are stored column-wise: an input is `in_dim × batch`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    layers: Vec<Linear>,
}

/// Layer inputs recorded by [`Mlp::forward_trace`] for the backward pass.
pub struct MlpTrace {
    inputs: Vec<DMatrix<f64>>,
}

impl Mlp {
    /// `sizes = [in, hidden.., out]`.
    pub fn new(sizes: &[usize], rng: &mut dyn RngCore) -> Result<Self> {
        if sizes.len() < 2 || sizes.contains(&0) {
            return Err(Error::config("layer sizes", format!("need at least two positive sizes, got {sizes:?}")));
        }
        let layers = sizes.windows(2).map(|w| Linear::new(w[0], w[1], rng)).collect();
        Ok(Mlp { layers })
    }

    pub fn from_layers(layers: Vec<Linear>) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::Empty("layers"));
        }
        for (k, l) in layers.iter().enumerate() {
            if l.bias.len() != l.weight.nrows() {
                return Err(Error::InvalidInput(format!("layer {k}: bias length does not match weight rows")));
            }
            if k > 0 && layers[k - 1].weight.nrows() != l.weight.ncols() {
                return Err(Error::InvalidInput(format!("layer {k}: input size does not match previous output")));
            }
        }
        let net = Mlp { layers };
        if !net.is_finite() {
            return Err(Error::NonFinite("network parameters".into()));
        }
        Ok(net)
    }

    pub fn layers(&self) -> &[Linear] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Linear] {
        &mut self.layers
    }

    pub fn in_dim(&self) -> usize {
        self.layers[0].weight.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map(|l| l.weight.nrows()).unwrap_or(0)
    }

    pub fn zeros_like(&self) -> Self {
        Mlp { layers: self.layers.iter().map(Linear::zeros_like).collect() }
    }

    pub fn n_params(&self) -> usize {
        self.layers.iter().map(|l| l.weight.len() + l.bias.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.param_slices().iter().all(|s| s.iter().all(|v| v.is_finite()))
    }

    pub fn param_slices(&self) -> Vec<&[f64]> {
        self.layers.iter().flat_map(|l| [l.weight.as_slice(), l.bias.as_slice()]).collect()
    }

    pub fn param_slices_mut(&mut self) -> Vec<&mut [f64]> {
        self.layers.iter_mut().flat_map(|l| [l.weight.as_mut_slice(), l.bias.as_mut_slice()]).collect()
    }

    /// Parameter `k` in flat order (layer by layer, weights column-major, then bias).
    pub fn param(&self, k: usize) -> f64 {
        let mut k = k;
        for s in self.param_slices() {
            if k < s.len() {
                return s[k];
            }
            k -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn set_param(&mut self, k: usize, value: f64) {
        let mut k = k;
        for s in self.param_slices_mut() {
            if k < s.len() {
                s[k] = value;
                return;
            }
            k -= s.len();
        }
        panic!("parameter index out of range")
    }

    pub fn forward(&self, x: &DMatrix<f64>) -> DMatrix<f64> {
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            h = affine(l, &h);
            if k < last {
                h.apply(|v| *v = v.max(0.0));
            }
        }
        h
    }

    pub fn forward_trace(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, MlpTrace) {
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut h = x.clone();
        let last = self.layers.len() - 1;
        for (k, l) in self.layers.iter().enumerate() {
            let out = {
                let mut y = affine(l, &h);
                if k < last {
                    y.apply(|v| *v = v.max(0.0));
                }
                y
            };
            inputs.push(h);
            h = out;
        }
        (h, MlpTrace { inputs })
    }

    /// Gradients of a scalar loss given `dL/d(output)`; returns parameter
    /// gradients (same shape as `self`) and `dL/d(input)`.
    pub fn backward(&self, trace: &MlpTrace, grad_out: &DMatrix<f64>) -> (Mlp, DMatrix<f64>) {
        let mut grads = self.zeros_like();
        let g = self.backprop(trace, grad_out, Some(&mut grads));
        (grads, g)
    }

    /// `dL/d(input)` only.
    pub fn backward_input(&self, trace: &MlpTrace, grad_out: &DMatrix<f64>) -> DMatrix<f64> {
        self.backprop(trace, grad_out, None)
    }

    fn backprop(&self, trace: &MlpTrace, grad_out: &DMatrix<f64>, mut grads: Option<&mut Mlp>) -> DMatrix<f64> {
        let mut g = grad_out.clone();
        for k in (0..self.layers.len()).rev() {
            let input = &trace.inputs[k];
            if let Some(grads) = grads.as_deref_mut() {
                let gl = &mut grads.layers[k];
                gl.weight.gemm(1.0, &g, &input.transpose(), 0.0);
                gl.bias = g.column_sum();
            }
            let mut gi = self.layers[k].weight.transpose() * &g;
            if k > 0 {
                // input of layer k is a ReLU output
                gi.zip_apply(input, |d, a| {
                    if a <= 0.0 {
                        *d = 0.0
                    }
                });
            }
            g = gi;
        }
        g
    }

    /// `self ← (1 − τ)·self + τ·source`.
    pub fn polyak_from(&mut self, source: &Mlp, tau: f64) {
        for (dst, src) in self.param_slices_mut().into_iter().zip(source.param_slices()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d = (1.0 - tau) * *d + tau * s;
            }
        }
    }

    pub fn scale_layer(&mut self, k: usize, factor: f64) {
        let l = &mut self.layers[k];
        l.weight *= factor;
        l.bias *= factor;
    }
}

fn affine(l: &Linear, x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut y = &l.weight * x;
    for mut col in y.column_iter_mut() {
        col += &l.bias;
    }
    y
}
