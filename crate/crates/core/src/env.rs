//! Block-insertion task: a rectangular bar is pushed into a channel cut into
//! a slab, with a few millimeters of total clearance.
//!
//! Target-frame layout: the slab's top surface is the plane `z = 0`, the
//! channel is centered on the origin and runs down to the floor at
//! `z = -depth`. The channel mouth is widened by a 45° chamfer of width
//! `chamfer`. Contact is a penalty model evaluated on the block's eight
//! corners.
//!
//! The impedance plant simulates the end-effector frame; the block hangs off
//! it through the grasp transform (`X_TE = X_TI · X_IE`).

use std::f64::consts::PI;
use std::io::Write;
use std::path::Path;

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{quat_diff_axis_angle, Pose, Quaternion, Vec3};
use crate::plant::{self, ImpedanceGains, PlantState, RigidBody, Wrench, CONTROL_DT};

/// Weight of the orientation term in the reward.
pub const ORIENTATION_REWARD_WEIGHT: f64 = 50.0;
/// Success radius around the goal position, meters.
pub const SUCCESS_POSITION: f64 = 0.005;
/// Success radius around the goal orientation, radians (5°).
pub const SUCCESS_ORIENTATION: f64 = 5.0 * PI / 180.0;
/// Policy steps per episode.
pub const EPISODE_STEPS: usize = 100;
/// Impedance-loop steps per policy step (1 kHz control, 10 Hz policy).
pub const SUBSTEPS: usize = 100;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InsertionScene {
    /// Half-widths of the channel cross-section along x and y.
    pub channel_halfwidths: [f64; 2],
    pub depth: f64,
    /// Total clearance between block and channel along each axis.
    pub tolerance: f64,
    pub chamfer: f64,
    pub goal: Pose,
    pub k_contact: f64,
    pub d_contact: f64,
    /// Block height along its local z axis.
    #[serde(default = "default_block_height")]
    pub block_height: f64,
    /// Penetration beyond half of this aborts the episode.
    #[serde(default = "default_wall_thickness")]
    pub wall_thickness: f64,
}

fn default_block_height() -> f64 {
    0.035
}

fn default_wall_thickness() -> f64 {
    0.01
}

impl Default for InsertionScene {
    /// A 7 × 3.5 × 3.5 cm bar in a channel with 3 mm total clearance.
    fn default() -> Self {
        InsertionScene {
            channel_halfwidths: [0.0365, 0.019],
            depth: 0.035,
            tolerance: 0.003,
            chamfer: 0.001,
            goal: Pose::from_position(Vec3::new(0.0, 0.0, -0.0175)),
            k_contact: 5000.0,
            d_contact: 50.0,
            block_height: default_block_height(),
            wall_thickness: default_wall_thickness(),
        }
    }
}

impl InsertionScene {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("channel_halfwidths[0]", self.channel_halfwidths[0]),
            ("channel_halfwidths[1]", self.channel_halfwidths[1]),
            ("depth", self.depth),
            ("tolerance", self.tolerance),
            ("k_contact", self.k_contact),
            ("block_height", self.block_height),
            ("wall_thickness", self.wall_thickness),
        ];
        for (field, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::config(field, format!("must be positive, got {v}")));
            }
        }
        if !(self.chamfer >= 0.0) || !(self.d_contact >= 0.0) {
            return Err(Error::config("chamfer/d_contact", "must be non-negative"));
        }
        if self.tolerance / 2.0 >= self.channel_halfwidths[0].min(self.channel_halfwidths[1]) {
            return Err(Error::config("tolerance", "clearance leaves no room for the block"));
        }
        let g = self.goal.p;
        let [hx, hy] = self.channel_halfwidths;
        if g.x.abs() > hx || g.y.abs() > hy || g.z > 0.0 || g.z < -self.depth {
            return Err(Error::config("goal", "goal must lie inside the channel"));
        }
        Ok(())
    }

    /// Block half extents: channel minus half the clearance laterally.
    pub fn block_half_extents(&self) -> Vec3 {
        let c = self.tolerance / 2.0;
        Vec3::new(self.channel_halfwidths[0] - c, self.channel_halfwidths[1] - c, self.block_height / 2.0)
    }

    pub fn block_corners(&self, block: &Pose) -> [Vec3; 8] {
        let h = self.block_half_extents();
        let mut out = [Vec3::zeros(); 8];
        for (k, c) in out.iter_mut().enumerate() {
            let s = |bit: usize| if k & (1 << bit) == 0 { -1.0 } else { 1.0 };
            *c = block.transform_point(&Vec3::new(s(0) * h.x, s(1) * h.y, s(2) * h.z));
        }
        out
    }

    /// Opening half-width along one axis at height `z`, including the chamfer.
    fn opening(&self, axis: usize, z: f64) -> f64 {
        self.channel_halfwidths[axis] + (self.chamfer + z).clamp(0.0, self.chamfer)
    }

    /// Penetration depth and outward surface normal for a point, or `None`
    /// when the point is in free space.
    pub fn penetration(&self, point: &Vec3) -> Option<(f64, Vec3)> {
        let z = point.z;
        if z >= 0.0 {
            return None;
        }
        let top = (-z, Vec3::z());
        if z < -self.depth {
            let (lat, n_lat) = self.lateral_excess(point, |axis| self.channel_halfwidths[axis]);
            let below = -self.depth - z;
            if lat == 0.0 {
                return Some((below, Vec3::z()));
            }
            // outside the floor footprint: back out over the floor edge
            let d = lat.hypot(below);
            let edge = (d, (n_lat * lat + Vec3::z() * below) / d);
            return Some(if edge.0 < top.0 { edge } else { top });
        }
        let (lat, n_lat) = self.lateral_excess(point, |axis| self.opening(axis, z));
        if lat == 0.0 {
            return None;
        }
        let side = if z > -self.chamfer {
            (lat / 2f64.sqrt(), (n_lat + Vec3::z()) / 2f64.sqrt())
        } else {
            (lat, n_lat)
        };
        Some(if side.0 < top.0 { side } else { top })
    }

    /// Distance from `point` to the rectangle `|x| ≤ hx(0), |y| ≤ hx(1)` in
    /// the horizontal plane, and the unit direction back toward it.
    fn lateral_excess(&self, point: &Vec3, half: impl Fn(usize) -> f64) -> (f64, Vec3) {
        let mut n = Vec3::zeros();
        for axis in 0..2 {
            let over = point[axis].abs() - half(axis);
            if over > 0.0 {
                n[axis] = -point[axis].signum() * over;
            }
        }
        let lat = n.norm();
        if lat == 0.0 {
            (0.0, n)
        } else {
            (lat, n / lat)
        }
    }

    /// Penalty contact wrench on a block moving with the given twist, torque
    /// taken about the block center.
    pub fn contact_wrench(&self, block: &Pose, linear: &Vec3, angular: &Vec3) -> ContactReport {
        self.corner_contact(&self.block_corners(block), block, linear, angular)
    }

    fn corner_contact(&self, corners: &[Vec3], block: &Pose, linear: &Vec3, angular: &Vec3) -> ContactReport {
        let mut report = ContactReport::default();
        for &corner in corners {
            if let Some((depth, n)) = self.penetration(&corner) {
                let r = corner - block.p;
                let v = linear + angular.cross(&r);
                let magnitude = (self.k_contact * depth - self.d_contact * v.dot(&n)).max(0.0);
                let f = n * magnitude;
                report.wrench.force += f;
                report.wrench.torque += r.cross(&f);
                report.contacts += 1;
                report.max_penetration = report.max_penetration.max(depth);
            }
        }
        report
    }

    pub fn reward(&self, obs: &Pose) -> f64 {
        reward(obs, &self.goal)
    }

    pub fn is_success(&self, obs: &Pose) -> bool {
        is_success(obs, &self.goal)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ContactReport {
    pub wrench: Wrench,
    pub contacts: usize,
    pub max_penetration: f64,
}

/// Dense reward: negative L1 position error minus 50 times the orientation
/// error magnitude.
pub fn reward(obs: &Pose, goal: &Pose) -> f64 {
    let pos: f64 = (goal.p - obs.p).abs().sum();
    -pos - ORIENTATION_REWARD_WEIGHT * quat_diff_axis_angle(&goal.q, &obs.q).angle()
}

/// Within 5 mm (Euclidean) and 5° of the goal; both strict.
pub fn is_success(obs: &Pose, goal: &Pose) -> bool {
    (obs.p - goal.p).norm() < SUCCESS_POSITION && quat_diff_axis_angle(&goal.q, &obs.q).angle() < SUCCESS_ORIENTATION
}

/// End-effector pose in the target frame, `s = [p, q] ∈ ℝ⁷`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observation {
    pub pose: Pose,
}

impl Observation {
    pub fn to_array(&self) -> [f64; 7] {
        self.pose.to_array()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepInfo {
    /// Any corner touched a surface during the sub-steps.
    pub contact: bool,
    pub max_penetration: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub observation: Observation,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
    pub info: StepInfo,
}

/// Distribution of episode start poses (interest-object frame).
pub trait StartSampler {
    fn sample(&self, rng: &mut dyn RngCore) -> Pose;
}

pub struct FixedStart(pub Pose);

impl StartSampler for FixedStart {
    fn sample(&self, _rng: &mut dyn RngCore) -> Pose {
        self.0
    }
}

/// Uniform in an axis-aligned box around `center`, with a uniform yaw
/// perturbation in `[-max_yaw, max_yaw]`.
pub struct BoxStart {
    pub center: Pose,
    pub half_extents: Vec3,
    pub max_yaw: f64,
}

impl StartSampler for BoxStart {
    fn sample(&self, rng: &mut dyn RngCore) -> Pose {
        let mut offset = Vec3::zeros();
        for i in 0..3 {
            let h = self.half_extents[i];
            if h > 0.0 {
                offset[i] = rng.random_range(-h..=h);
            }
        }
        let yaw = if self.max_yaw > 0.0 { rng.random_range(-self.max_yaw..=self.max_yaw) } else { 0.0 };
        Pose::new(self.center.p + offset, Quaternion::from_axis_angle(&Vec3::z(), yaw) * self.center.q)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EnvConfig {
    pub gains: ImpedanceGains,
    pub body: RigidBody,
    /// End effector pose in the interest-object frame (`X_IE`).
    pub grasp: Pose,
    /// Constant load the impedance controller does not compensate, applied
    /// at the end effector (payload, cable drag, joint friction).
    pub disturbance: Wrench,
    pub dt: f64,
    pub substeps: usize,
    pub horizon: usize,
}

impl Default for EnvConfig {
    fn default() -> Self {
        let body = RigidBody::default();
        EnvConfig {
            gains: ImpedanceGains::default(),
            grasp: Pose::identity(),
            disturbance: Wrench::new(Vec3::new(0.21, -0.12, 0.0), Vec3::new(0.0, 0.0, 0.31)),
            body,
            dt: CONTROL_DT,
            substeps: SUBSTEPS,
            horizon: EPISODE_STEPS,
        }
    }
}

pub struct InsertionEnv {
    scene: InsertionScene,
    cfg: EnvConfig,
    goal_ee: Pose,
    state: PlantState,
    t: usize,
    done: bool,
}

impl InsertionEnv {
    pub fn new(scene: InsertionScene, cfg: EnvConfig) -> Result<Self> {
        scene.validate()?;
        if cfg.substeps == 0 || cfg.horizon == 0 || !(cfg.dt > 0.0) {
            return Err(Error::config("env", "substeps, horizon and dt must be positive"));
        }
        let goal_ee = scene.goal * cfg.grasp;
        let state = PlantState::at_rest(goal_ee, cfg.body.clone());
        Ok(InsertionEnv { scene, cfg, goal_ee, state, t: 0, done: true })
    }

    pub fn scene(&self) -> &InsertionScene {
        &self.scene
    }

    pub fn config(&self) -> &EnvConfig {
        &self.cfg
    }

    pub fn state(&self) -> &PlantState {
        &self.state
    }

    pub fn t(&self) -> usize {
        self.t
    }

    pub fn is_done(&self) -> bool {
        self.done
    }

    pub fn goal(&self) -> &Pose {
        &self.goal_ee
    }

    pub fn observation(&self) -> Observation {
        Observation { pose: self.state.pose }
    }

    /// Interest-object pose for the current end-effector pose.
    pub fn block_pose(&self) -> Pose {
        self.state.pose * self.cfg.grasp.inverse()
    }

    /// Starts an episode at an object pose drawn from `sampler`.
    pub fn reset(&mut self, sampler: &dyn StartSampler, seed: u64) -> Observation {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let start = sampler.sample(&mut rng);
        self.reset_to(&start)
    }

    pub fn reset_to(&mut self, object_start: &Pose) -> Observation {
        self.state = PlantState::at_rest(*object_start * self.cfg.grasp, self.cfg.body.clone());
        self.t = 0;
        self.done = false;
        self.observation()
    }

    /// Holds `setpoint` (end-effector frame) for one policy period.
    pub fn step(&mut self, setpoint: &Pose) -> Result<StepResult> {
        if self.done {
            return Err(Error::EpisodeDone);
        }
        if !setpoint.is_finite() {
            return Err(Error::NonFinite("setpoint".into()));
        }
        let grasp_inv = self.cfg.grasp.inverse();
        let mut info = StepInfo { contact: false, max_penetration: 0.0 };
        for _ in 0..self.cfg.substeps {
            let block = self.state.pose * grasp_inv;
            // block-center velocity from the end-effector twist
            let lever = block.p - self.state.pose.p;
            let block_vel = self.state.linear + self.state.angular.cross(&lever);
            let report = self.scene.contact_wrench(&block, &block_vel, &self.state.angular);
            if report.contacts > 0 {
                info.contact = true;
                info.max_penetration = info.max_penetration.max(report.max_penetration);
                if report.max_penetration > self.scene.wall_thickness / 2.0 {
                    return Err(Error::Simulation(format!(
                        "block tunneled {:.4} m into a wall at step {}",
                        report.max_penetration, self.t
                    )));
                }
            }
            let contact_at_ee = Wrench::new(report.wrench.force, report.wrench.torque + lever.cross(&report.wrench.force));
            let external = contact_at_ee + self.cfg.disturbance;
            self.state = plant::step(&self.state, setpoint, &self.cfg.gains, &external, self.cfg.dt)?;
        }
        self.t += 1;
        let observation = self.observation();
        let reward = reward(&observation.pose, &self.goal_ee);
        let success = is_success(&observation.pose, &self.goal_ee);
        self.done = success || self.t >= self.cfg.horizon;
        Ok(StepResult { observation, reward, done: self.done, success, info })
    }
}

/// One row of an episode log.
#[derive(Debug, Clone, PartialEq)]
pub struct LogRow {
    pub t: usize,
    /// Observation the action was chosen from.
    pub pose: Pose,
    /// Residual position offset actually applied.
    pub action_p: Vec3,
    /// Residual axis-angle offset actually applied.
    pub action_v: Vec3,
    pub beta: u8,
    pub reward: f64,
    pub done: bool,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EpisodeLog {
    pub rows: Vec<LogRow>,
}

pub const EPISODE_LOG_HEADER: [&str; 18] = [
    "t", "px", "py", "pz", "qw", "qx", "qy", "qz", "ax", "ay", "az", "avx", "avy", "avz", "beta", "reward", "done", "success",
];

impl EpisodeLog {
    pub fn total_reward(&self) -> f64 {
        self.rows.iter().map(|r| r.reward).sum()
    }

    pub fn steps(&self) -> usize {
        self.rows.len()
    }

    pub fn success(&self) -> bool {
        self.rows.last().is_some_and(|r| r.success)
    }

    pub fn betas(&self) -> Vec<u8> {
        self.rows.iter().map(|r| r.beta).collect()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(EPISODE_LOG_HEADER)?;
        for r in &self.rows {
            let a = r.pose.to_array();
            let mut rec: Vec<String> = vec![r.t.to_string()];
            rec.extend(a.iter().map(|v| v.to_string()));
            rec.extend(r.action_p.iter().chain(r.action_v.iter()).map(|v| v.to_string()));
            rec.push(r.beta.to_string());
            rec.push(r.reward.to_string());
            rec.push((r.done as u8).to_string());
            rec.push((r.success as u8).to_string());
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}
