use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Phase of step `t` in an episode of `horizon` steps: `t / (horizon - 1)`.
pub fn phase(t: usize, horizon: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(Error::InvalidInput(format!("horizon must be at least 2, got {horizon}")));
    }
    if t >= horizon {
        return Err(Error::InvalidInput(format!("step {t} outside horizon {horizon}")));
    }
    Ok(t as f64 / (horizon - 1) as f64)
}

/// Evenly spaced phase grid with `len` points on `[0, 1]`.
pub fn phase_grid(len: usize) -> Vec<f64> {
    (0..len).map(|j| j as f64 / (len - 1) as f64).collect()
}

/// Normalized Gaussian radial basis functions over the phase interval.
///
/// Activation of basis `n` at phase `z` is `exp(-(z - c_n)² / (2h))`, divided
/// by the sum over all bases so the vector partitions unity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisSet {
    centers: Vec<f64>,
    width: f64,
}

impl BasisSet {
    /// `n` bases with centers spread evenly on `[0, 1]` and the default width
    /// `1 / (2 n²)`.
    pub fn new(n: usize) -> Result<Self> {
        Self::with_width(n, 1.0 / (2.0 * (n * n) as f64))
    }

    pub fn with_width(n: usize, width: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("basis count must be positive".into()));
        }
        let centers = if n == 1 { vec![0.5] } else { phase_grid(n) };
        Self::from_parts(centers, width)
    }

    pub fn from_parts(centers: Vec<f64>, width: f64) -> Result<Self> {
        if centers.is_empty() {
            return Err(Error::Empty("basis centers"));
        }
        if !(width > 0.0 && width.is_finite()) {
            return Err(Error::InvalidInput(format!("basis width must be positive and finite, got {width}")));
        }
        if centers.windows(2).any(|w| !(w[1] > w[0])) || centers.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidInput("basis centers must be finite and strictly increasing".into()));
        }
        Ok(BasisSet { centers, width })
    }

    pub fn len(&self) -> usize {
        self.centers.len()
    }

    pub fn is_empty(&self) -> bool {
        self.centers.is_empty()
    }

    pub fn centers(&self) -> &[f64] {
        &self.centers
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Normalized activations `φ_z`. Computed in log space so the narrow-width
    /// limit degrades to a one-hot vector instead of `0 / 0`.
    pub fn eval(&self, z: f64) -> DVector<f64> {
        let logits: Vec<f64> = self
            .centers
            .iter()
            .map(|c| -(z - c) * (z - c) / (2.0 * self.width))
            .collect();
        let max = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut phi = DVector::from_iterator(logits.len(), logits.iter().map(|l| (l - max).exp()));
        let sum = phi.sum();
        phi /= sum;
        phi
    }

    /// Design matrix with one row `φ_zᵀ` per phase.
    pub fn design_matrix(&self, phases: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(phases.len(), self.len());
        for (row, &z) in phases.iter().enumerate() {
            m.row_mut(row).copy_from(&self.eval(z).transpose());
        }
        m
    }
}
