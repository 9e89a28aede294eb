use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use super::basis::{phase_grid, BasisSet};
use super::demonstration::Demonstration;
use crate::error::{Error, Result};

/// Smallest eigenvalue tolerated when checking a covariance for PSD.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitConfig {
    pub n_basis: usize,
    /// Basis width; `None` selects `1 / (2 n²)`.
    pub width: Option<f64>,
    /// Ridge coefficient of the per-demonstration weight regression.
    pub ridge: f64,
    /// Added to the diagonal of the weight covariance.
    pub cov_reg: f64,
    /// Demonstrations are resampled onto this many evenly spaced phases.
    pub phase_grid_len: usize,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { n_basis: 10, width: None, ridge: 1e-6, cov_reg: 1e-8, phase_grid_len: 100 }
    }
}

/// Gaussian distribution over the weights of `dim` independent basis
/// expansions: `y_z = Φ_zᵀ ω` with `Φ_z = I_d ⊗ φ_z`.
///
/// Weights are laid out dimension-major, `ω = [ω_0; ω_1; …; ω_{d-1}]`, each
/// block holding the `N` weights of one output dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct ProMP {
    basis: BasisSet,
    dim: usize,
    mean: DVector<f64>,
    cov: DMatrix<f64>,
    phase_grid_len: usize,
}

/// Per-phase Gaussian over the trajectory point.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub mean: DVector<f64>,
    pub cov: DMatrix<f64>,
}

impl Marginal {
    pub fn std(&self) -> DVector<f64> {
        self.cov.diagonal().map(|v| v.max(0.0).sqrt())
    }
}

impl ProMP {
    pub fn new(basis: BasisSet, dim: usize, mean: DVector<f64>, cov: DMatrix<f64>, phase_grid_len: usize) -> Result<Self> {
        let n = basis.len() * dim;
        if dim == 0 {
            return Err(Error::InvalidInput("trajectory dimension must be positive".into()));
        }
        if mean.len() != n || cov.nrows() != n || cov.ncols() != n {
            return Err(Error::InvalidInput(format!(
                "weight distribution must have {n} entries, got mean {} and covariance {}x{}",
                mean.len(),
                cov.nrows(),
                cov.ncols()
            )));
        }
        if mean.iter().chain(cov.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("weight distribution".into()));
        }
        let asym = (&cov - cov.transpose()).abs().max();
        if asym > 1e-9 * cov.abs().max().max(1.0) {
            return Err(Error::NotPositiveDefinite(format!("weight covariance asymmetric by {asym:e}")));
        }
        let cov = symmetrize(cov);
        let min_eig = min_eigenvalue(&cov);
        if min_eig < -PSD_TOLERANCE {
            return Err(Error::NotPositiveDefinite(format!("weight covariance has eigenvalue {min_eig:e}")));
        }
        Ok(ProMP { basis, dim, mean, cov, phase_grid_len })
    }

    pub fn basis(&self) -> &BasisSet {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_basis(&self) -> usize {
        self.basis.len()
    }

    pub fn mean(&self) -> &DVector<f64> {
        &self.mean
    }

    pub fn cov(&self) -> &DMatrix<f64> {
        &self.cov
    }

    pub fn phase_grid_len(&self) -> usize {
        self.phase_grid_len
    }

    /// `Φ_z = I_d ⊗ φ_z`, shape `(N·d) × d`.
    pub fn phi(&self, z: f64) -> DMatrix<f64> {
        let phi = self.basis.eval(z);
        let n = self.basis.len();
        let mut m = DMatrix::zeros(n * self.dim, self.dim);
        for i in 0..self.dim {
            m.view_mut((i * n, i), (n, 1)).copy_from(&phi);
        }
        m
    }

    pub fn marginal(&self, z: f64) -> Marginal {
        let phi = self.phi(z);
        let mean = phi.transpose() * &self.mean;
        let cov = symmetrize(phi.transpose() * &self.cov * &phi);
        Marginal { mean, cov }
    }

    pub fn mean_at(&self, z: f64) -> DVector<f64> {
        self.phi(z).transpose() * &self.mean
    }

    /// Per-dimension standard deviation of the trajectory at phase `z`.
    pub fn std_at(&self, z: f64) -> DVector<f64> {
        let phi = self.basis.eval(z);
        let n = self.basis.len();
        DVector::from_iterator(
            self.dim,
            (0..self.dim).map(|i| {
                let block = self.cov.view((i * n, i * n), (n, n));
                (phi.transpose() * block * &phi)[(0, 0)].max(0.0).sqrt()
            }),
        )
    }

    /// Gaussian conditioning on passing through `target` at phase `z` with
    /// observation covariance `target_cov`.
    pub fn condition(&self, z: f64, target: &DVector<f64>, target_cov: &DMatrix<f64>) -> Result<ProMP> {
        if target.len() != self.dim || target_cov.shape() != (self.dim, self.dim) {
            return Err(Error::InvalidInput(format!("conditioning target must have dimension {}", self.dim)));
        }
        let phi = self.phi(z);
        let cov_phi = &self.cov * &phi;
        let innovation_cov = symmetrize(target_cov + phi.transpose() * &cov_phi);
        let chol = Cholesky::new(innovation_cov).ok_or_else(|| {
            Error::NotPositiveDefinite(format!("innovation covariance at phase {z} (check the observation covariance)"))
        })?;
        // K = Σφ S⁻¹, computed as (S⁻¹ φᵀΣ)ᵀ since S is symmetric
        let gain = chol.solve(&cov_phi.transpose()).transpose();
        let residual = target - phi.transpose() * &self.mean;
        let mean = &self.mean + &gain * residual;
        let cov = symmetrize(&self.cov - &gain * cov_phi.transpose());
        ProMP::new(self.basis.clone(), self.dim, mean, cov, self.phase_grid_len)
    }

    /// True iff every coordinate of `y` lies within `k` standard deviations of
    /// the mean at phase `z` (boundary included).
    pub fn in_confidence_region(&self, z: f64, y: &DVector<f64>, k: f64) -> bool {
        let mean = self.mean_at(z);
        let std = self.std_at(z);
        (0..self.dim).all(|i| (y[i] - mean[i]).abs() <= k * std[i])
    }

    /// Sum of per-sample Gaussian log densities of `points` (phase, value)
    /// under the marginal inflated by isotropic observation noise.
    pub fn log_likelihood_points(&self, points: &[(f64, DVector<f64>)], obs_std: f64) -> Result<f64> {
        let noise = DMatrix::identity(self.dim, self.dim) * (obs_std * obs_std);
        let mut total = 0.0;
        for (step, (z, y)) in points.iter().enumerate() {
            let m = self.marginal(*z);
            let cov = m.cov + &noise;
            let chol = Cholesky::new(cov).ok_or(Error::SingularMarginal { step, phase: *z })?;
            let r = y - m.mean;
            let maha = r.dot(&chol.solve(&r));
            let log_det: f64 = 2.0 * chol.l_dirty().diagonal().iter().map(|v| v.ln()).sum::<f64>();
            if !log_det.is_finite() {
                return Err(Error::SingularMarginal { step, phase: *z });
            }
            total += -0.5 * (maha + log_det + self.dim as f64 * (2.0 * PI).ln());
        }
        Ok(total)
    }

    /// Log-likelihood of a demonstration's positions at their own phases.
    pub fn log_likelihood(&self, demo: &Demonstration, obs_std: f64) -> Result<f64> {
        self.expect_position_model()?;
        let points: Vec<_> = demo
            .phases()
            .into_iter()
            .zip(demo.poses())
            .map(|(z, p)| (z, DVector::from_column_slice(p.p.as_slice())))
            .collect();
        self.log_likelihood_points(&points, obs_std)
    }

    fn expect_position_model(&self) -> Result<()> {
        if self.dim != 3 {
            return Err(Error::InvalidInput(format!("expected a 3-D position model, got dimension {}", self.dim)));
        }
        Ok(())
    }
}

/// Maximum-likelihood ProMP over demonstration positions.
///
/// Each demonstration is resampled onto a common phase grid and regressed
/// with ridge regularization; the weight distribution is the sample mean and
/// (unbiased) covariance of the per-demonstration weights plus `cov_reg · I`.
pub fn fit(demos: &[Demonstration], cfg: &FitConfig) -> Result<ProMP> {
    if demos.len() < 2 {
        return Err(Error::InvalidInput(format!("fitting needs at least 2 demonstrations, got {}", demos.len())));
    }
    if cfg.phase_grid_len < 2 {
        return Err(Error::config("phase_grid_len", "must be at least 2"));
    }
    if !(cfg.ridge >= 0.0) || !(cfg.cov_reg >= 0.0) {
        return Err(Error::config("ridge/cov_reg", "must be non-negative"));
    }
    let basis = match cfg.width {
        Some(w) => BasisSet::with_width(cfg.n_basis, w)?,
        None => BasisSet::new(cfg.n_basis)?,
    };
    let n = basis.len();
    let dim = 3;
    let grid = phase_grid(cfg.phase_grid_len);
    let design = basis.design_matrix(&grid);
    let gram = design.transpose() * &design + DMatrix::identity(n, n) * cfg.ridge;
    let chol = Cholesky::new(gram)
        .ok_or_else(|| Error::NotPositiveDefinite("basis Gram matrix; increase the ridge coefficient".into()))?;

    let weights: Vec<DVector<f64>> = demos
        .iter()
        .map(|demo| {
            let samples = demo.resample_positions(&grid);
            let mut w = DVector::zeros(n * dim);
            for i in 0..dim {
                let y = DVector::from_iterator(grid.len(), samples.iter().map(|p| p[i]));
                let wi = chol.solve(&(design.transpose() * y));
                w.rows_mut(i * n, n).copy_from(&wi);
            }
            w
        })
        .collect();

    let count = weights.len() as f64;
    let mean = weights.iter().fold(DVector::zeros(n * dim), |acc, w| acc + w) / count;
    let mut cov = DMatrix::identity(n * dim, n * dim) * cfg.cov_reg;
    for w in &weights {
        let d = w - &mean;
        cov += &d * d.transpose() / (count - 1.0);
    }
    ProMP::new(basis, dim, mean, cov, cfg.phase_grid_len)
}

/// Total data log-likelihood of the demonstrations for each candidate basis
/// count, each model fitted on the same demonstrations.
pub fn basis_grid_search(
    demos: &[Demonstration],
    candidates: &[usize],
    cfg: &FitConfig,
    obs_std: f64,
) -> Result<Vec<(usize, f64)>> {
    candidates
        .iter()
        .map(|&n_basis| {
            let model = fit(demos, &FitConfig { n_basis, ..cfg.clone() })?;
            let ll = demos.iter().map(|d| model.log_likelihood(d, obs_std)).sum::<Result<f64>>()?;
            Ok((n_basis, ll))
        })
        .collect()
}

pub(crate) fn symmetrize(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

pub(crate) fn min_eigenvalue(m: &DMatrix<f64>) -> f64 {
    SymmetricEigen::new(m.clone()).eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
}
