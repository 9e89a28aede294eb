//! Probabilistic movement primitives over object positions.
//!
//! A [`ProMP`] is a Gaussian over basis-function weights fitted to a handful
//! of demonstrations. Conditioning it on the observed start position yields
//! the nominal trajectory; the per-phase spread of the unconditioned model
//! is what the variance gate in [`crate::residual`] looks at.

mod basis;
mod demonstration;
mod file;
mod model;
mod nominal;

pub use basis::{phase, phase_grid, BasisSet};
pub use demonstration::Demonstration;
pub use file::ProMPFile;
pub use model::{basis_grid_search, fit, FitConfig, Marginal, ProMP, PSD_TOLERANCE};
pub use nominal::{nominal_trajectory, orientation_schedule, std_schedule, NominalOptions, NominalTrajectory, OrientationAveraging};
