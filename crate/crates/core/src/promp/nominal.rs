use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::basis::phase;
use super::demonstration::Demonstration;
use super::model::ProMP;
use crate::error::{Error, Result};
use crate::geometry::{quat_mean, Pose, Quaternion, Vec3};

/// How demonstration orientations are averaged into a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrientationAveraging {
    /// Independent mean at every phase step.
    #[default]
    PerStep,
    /// One mean over all samples of all demonstrations, held constant.
    WholeTrajectory,
}

/// Averaged demonstration orientation at each of `horizon` phase steps.
pub fn orientation_schedule(demos: &[Demonstration], horizon: usize, mode: OrientationAveraging) -> Result<Vec<Quaternion>> {
    if demos.is_empty() {
        return Err(Error::Empty("demonstrations"));
    }
    match mode {
        OrientationAveraging::PerStep => (0..horizon)
            .map(|t| {
                let z = phase(t, horizon)?;
                let qs: Vec<_> = demos.iter().map(|d| d.orientation_at_phase(z)).collect();
                quat_mean(&qs)
            })
            .collect(),
        OrientationAveraging::WholeTrajectory => {
            let all: Vec<_> = demos.iter().flat_map(|d| d.poses().iter().map(|p| p.q)).collect();
            let mean = quat_mean(&all)?;
            Ok(vec![mean; horizon])
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NominalOptions {
    /// Isotropic covariance of the start observation used for conditioning.
    pub condition_var: f64,
    /// Start must lie within this many standard deviations at phase 0.
    pub confidence_k: f64,
    /// Skip the confidence check (the result is flagged as forced).
    pub force: bool,
}

impl Default for NominalOptions {
    fn default() -> Self {
        NominalOptions { condition_var: 1e-8, confidence_k: 2.0, force: false }
    }
}

/// Desired interest-object poses for one episode plus the per-step standard
/// deviation of the unconditioned model.
#[derive(Debug, Clone, PartialEq)]
pub struct NominalTrajectory {
    pub poses: Vec<Pose>,
    pub std: Vec<Vec3>,
    /// Set when the start lay outside the confidence region but the caller
    /// forced conditioning anyway.
    pub forced: bool,
}

impl NominalTrajectory {
    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }
}

/// Conditions `promp` on `start` at phase 0 and samples the conditioned mean
/// on the episode's phase grid. Standard deviations come from the original
/// model, not the conditioned one.
pub fn nominal_trajectory(
    promp: &ProMP,
    start: &Pose,
    horizon: usize,
    orientations: &[Quaternion],
    opts: &NominalOptions,
) -> Result<NominalTrajectory> {
    if orientations.len() != horizon {
        return Err(Error::InvalidInput(format!(
            "orientation schedule has {} entries for horizon {horizon}",
            orientations.len()
        )));
    }
    let y0 = DVector::from_column_slice(start.p.as_slice());
    let inside = promp.in_confidence_region(0.0, &y0, opts.confidence_k);
    if !inside && !opts.force {
        return Err(Error::InvalidInput(format!(
            "start position {:?} lies outside the {}-sigma region of the demonstrations",
            start.p.as_slice(),
            opts.confidence_k
        )));
    }
    let cond = promp.condition(0.0, &y0, &(DMatrix::identity(promp.dim(), promp.dim()) * opts.condition_var))?;
    let mut poses = Vec::with_capacity(horizon);
    let mut std = Vec::with_capacity(horizon);
    for (t, q) in orientations.iter().enumerate() {
        let z = phase(t, horizon)?;
        let m = cond.mean_at(z);
        poses.push(Pose::new(Vec3::new(m[0], m[1], m[2]), *q));
        let s = promp.std_at(z);
        std.push(Vec3::new(s[0], s[1], s[2]));
    }
    Ok(NominalTrajectory { poses, std, forced: !inside })
}

/// Per-step standard deviation of the unconditioned model on a horizon grid.
pub fn std_schedule(promp: &ProMP, horizon: usize) -> Result<Vec<Vec3>> {
    (0..horizon)
        .map(|t| {
            let s = promp.std_at(phase(t, horizon)?);
            Ok(Vec3::new(s[0], s[1], s[2]))
        })
        .collect()
}
