use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};

/// One recorded trajectory of the interest object, expressed in the target
/// frame, with timestamps in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Demonstration {
    timestamps: Vec<f64>,
    poses: Vec<Pose>,
}

impl Demonstration {
    pub fn new(timestamps: Vec<f64>, poses: Vec<Pose>) -> Result<Self> {
        if timestamps.len() != poses.len() {
            return Err(Error::InvalidInput(format!(
                "{} timestamps but {} poses",
                timestamps.len(),
                poses.len()
            )));
        }
        if timestamps.len() < 2 {
            return Err(Error::InvalidInput("a demonstration needs at least 2 samples".into()));
        }
        if let Some(k) = timestamps.windows(2).position(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput(format!("timestamps not strictly increasing at sample {}", k + 1)));
        }
        if let Some(k) = timestamps.iter().zip(&poses).position(|(t, p)| !t.is_finite() || !p.is_finite()) {
            return Err(Error::NonFinite(format!("demonstration sample {k}")));
        }
        Ok(Demonstration { timestamps, poses })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn timestamps(&self) -> &[f64] {
        &self.timestamps
    }

    pub fn poses(&self) -> &[Pose] {
        &self.poses
    }

    /// Normalized phase of every sample: `(t - t_0) / (t_end - t_0)`.
    pub fn phases(&self) -> Vec<f64> {
        let t0 = self.timestamps[0];
        let span = self.timestamps[self.len() - 1] - t0;
        self.timestamps.iter().map(|t| (t - t0) / span).collect()
    }

    /// Linearly interpolated position at phase `z` (slerp for orientation).
    pub fn pose_at_phase(&self, z: f64) -> Pose {
        let phases = self.phases();
        let z = z.clamp(0.0, 1.0);
        let k = match phases.iter().position(|&u| u >= z) {
            Some(0) | None => return self.poses[if z <= 0.0 { 0 } else { self.len() - 1 }],
            Some(k) => k,
        };
        let (a, b) = (&self.poses[k - 1], &self.poses[k]);
        let s = (z - phases[k - 1]) / (phases[k] - phases[k - 1]);
        Pose::new(a.p + (b.p - a.p) * s, a.q.slerp(&b.q, s))
    }

    pub fn position_at_phase(&self, z: f64) -> Vec3 {
        self.pose_at_phase(z).p
    }

    pub fn orientation_at_phase(&self, z: f64) -> Quaternion {
        self.pose_at_phase(z).q
    }

    /// Positions resampled onto the given phase grid.
    pub fn resample_positions(&self, grid: &[f64]) -> Vec<Vec3> {
        grid.iter().map(|&z| self.position_at_phase(z)).collect()
    }
}
