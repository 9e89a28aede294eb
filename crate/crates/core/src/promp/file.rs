use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::BasisSet;
use super::model::ProMP;
use crate::error::{Error, Result};
use crate::geometry::Quaternion;

/// On-disk JSON form of a fitted model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProMPFile {
    pub n_basis: usize,
    pub width: f64,
    pub centers: Vec<f64>,
    pub dim: usize,
    pub mu_w: Vec<f64>,
    pub sigma_w: Vec<Vec<f64>>,
    pub phase_grid_len: usize,
    /// Averaged demonstration orientations, `[w, x, y, z]` per episode step.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub orientation_schedule: Option<Vec<[f64; 4]>>,
}

impl ProMPFile {
    pub fn from_model(model: &ProMP, orientations: Option<&[Quaternion]>) -> Self {
        let cov = model.cov();
        ProMPFile {
            n_basis: model.n_basis(),
            width: model.basis().width(),
            centers: model.basis().centers().to_vec(),
            dim: model.dim(),
            mu_w: model.mean().iter().cloned().collect(),
            sigma_w: (0..cov.nrows()).map(|r| cov.row(r).iter().cloned().collect()).collect(),
            phase_grid_len: model.phase_grid_len(),
            orientation_schedule: orientations.map(|qs| qs.iter().map(|q| q.to_array()).collect()),
        }
    }

    /// Rebuilds the model, validating shapes and positive semi-definiteness.
    pub fn to_model(&self) -> Result<ProMP> {
        if self.centers.len() != self.n_basis {
            return Err(Error::InvalidInput(format!(
                "n_basis is {} but {} centers are given",
                self.n_basis,
                self.centers.len()
            )));
        }
        let n = self.n_basis * self.dim;
        if self.sigma_w.len() != n || self.sigma_w.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput(format!("sigma_w must be {n}x{n}")));
        }
        let basis = BasisSet::from_parts(self.centers.clone(), self.width)?;
        let cov = DMatrix::from_fn(n, n, |r, c| self.sigma_w[r][c]);
        ProMP::new(basis, self.dim, DVector::from_vec(self.mu_w.clone()), cov, self.phase_grid_len)
    }

    pub fn orientations(&self) -> Option<Vec<Quaternion>> {
        self.orientation_schedule.as_ref().map(|qs| qs.iter().map(|q| Quaternion::from_array(*q)).collect())
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))?;
        serde_json::from_str(&text).map_err(|e| Error::file(path, e.to_string()))
    }
}
