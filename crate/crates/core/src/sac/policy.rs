use std::f64::consts::{LN_2, PI};

use nalgebra::{DMatrix, DVector};
use rand::RngCore;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::mlp::{Mlp, MlpTrace};
use crate::error::{Error, Result};

pub const LOG_STD_MIN: f64 = -20.0;
pub const LOG_STD_MAX: f64 = 2.0;

/// Diagonal Gaussian in a latent space, squashed by `tanh` and scaled to
/// per-dimension action limits. The network emits `[mean; log_std]` from
/// shared hidden features.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SquashedGaussianPolicy {
    pub net: Mlp,
    pub limits: Vec<f64>,
}

/// A batch of reparameterized samples `u = μ + σ·ξ`, `a = tanh(u)`.
/// Columns are batch entries.
pub struct PolicyBatch {
    pub mean: DMatrix<f64>,
    pub log_std: DMatrix<f64>,
    /// Entries where the raw log-std was inside the clamp range.
    pub unclamped: DMatrix<bool>,
    pub noise: DMatrix<f64>,
    pub latent: DMatrix<f64>,
    /// Normalized action in `(-1, 1)`.
    pub action: DMatrix<f64>,
    pub log_prob: DVector<f64>,
    pub trace: MlpTrace,
}

/// Single action for acting in the environment.
#[derive(Debug, Clone, PartialEq)]
pub struct ActionSample {
    /// Environment units, strictly inside the limits.
    pub action: Vec<f64>,
    pub latent: Vec<f64>,
    pub log_prob: f64,
}

/// `log(1 − tanh²u)` written to stay finite for large `|u|`.
pub fn log_tanh_jacobian(u: f64) -> f64 {
    2.0 * (LN_2 - u - softplus(-2.0 * u))
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

/// Log density of `tanh(u)` in normalized action space, for
/// `u = mean + exp(log_std)·noise`.
pub fn squashed_log_prob(noise: f64, log_std: f64, latent: f64) -> f64 {
    -0.5 * noise * noise - 0.5 * (2.0 * PI).ln() - log_std - log_tanh_jacobian(latent)
}

impl SquashedGaussianPolicy {
    pub fn new(net: Mlp, limits: Vec<f64>) -> Result<Self> {
        if net.out_dim() != 2 * limits.len() {
            return Err(Error::InvalidInput(format!(
                "policy network emits {} values, need {} for {} action dimensions",
                net.out_dim(),
                2 * limits.len(),
                limits.len()
            )));
        }
        if limits.iter().any(|l| !(*l > 0.0 && l.is_finite())) {
            return Err(Error::config("action_limits", "must be positive and finite"));
        }
        Ok(SquashedGaussianPolicy { net, limits })
    }

    pub fn action_dim(&self) -> usize {
        self.limits.len()
    }

    /// Samples with caller-supplied standard-normal noise (`action_dim × batch`).
    pub fn sample_with_noise(&self, obs: &DMatrix<f64>, noise: &DMatrix<f64>) -> PolicyBatch {
        let a_dim = self.action_dim();
        let (out, trace) = self.net.forward_trace(obs);
        let mean = out.rows(0, a_dim).into_owned();
        let raw = out.rows(a_dim, a_dim);
        let log_std = raw.map(|v| v.clamp(LOG_STD_MIN, LOG_STD_MAX));
        let unclamped = raw.map(|v| (LOG_STD_MIN..=LOG_STD_MAX).contains(&v));
        let latent = DMatrix::from_fn(a_dim, obs.ncols(), |i, j| mean[(i, j)] + log_std[(i, j)].exp() * noise[(i, j)]);
        let action = latent.map(f64::tanh);
        let log_prob = DVector::from_fn(obs.ncols(), |j, _| {
            (0..a_dim).map(|i| squashed_log_prob(noise[(i, j)], log_std[(i, j)], latent[(i, j)])).sum()
        });
        PolicyBatch { mean, log_std, unclamped, noise: noise.clone(), latent, action, log_prob, trace }
    }

    /// Samples for one observation; `deterministic` uses the mean (`ξ = 0`).
    pub fn act(&self, obs: &[f64], rng: &mut dyn RngCore, deterministic: bool) -> ActionSample {
        let a_dim = self.action_dim();
        let x = DMatrix::from_column_slice(obs.len(), 1, obs);
        let noise = if deterministic {
            DMatrix::zeros(a_dim, 1)
        } else {
            DMatrix::from_fn(a_dim, 1, |_, _| StandardNormal.sample(rng))
        };
        let s = self.sample_with_noise(&x, &noise);
        ActionSample {
            action: (0..a_dim).map(|i| s.action[i] * self.limits[i]).collect(),
            latent: s.latent.iter().cloned().collect(),
            log_prob: s.log_prob[0],
        }
    }

    /// Maps an environment-unit action back to `(-1, 1)`.
    pub fn normalize(&self, action: &[f64]) -> Vec<f64> {
        action.iter().zip(&self.limits).map(|(a, l)| a / l).collect()
    }

    /// Backpropagates `dL/du` (latent) and the direct `dL/dlog_std` into the
    /// network. Gradients at clamped log-std entries are dropped.
    pub fn backward(&self, batch: &PolicyBatch, grad_latent: &DMatrix<f64>, grad_log_std_direct: &DMatrix<f64>) -> Mlp {
        let a_dim = self.action_dim();
        let n = batch.latent.ncols();
        let mut grad_out = DMatrix::zeros(2 * a_dim, n);
        for j in 0..n {
            for i in 0..a_dim {
                let g = grad_latent[(i, j)];
                grad_out[(i, j)] = g;
                if batch.unclamped[(i, j)] {
                    let sigma = batch.log_std[(i, j)].exp();
                    grad_out[(a_dim + i, j)] = g * sigma * batch.noise[(i, j)] + grad_log_std_direct[(i, j)];
                }
            }
        }
        self.net.backward(&batch.trace, &grad_out).0
    }
}
