//! Synthetic insertion demonstrations and the demonstration CSV format.
//!
//! A generated demo moves from a random start above the table to a waypoint
//! above the channel mouth, descends into the channel and holds at the goal.
//! Position noise is low-pass filtered and fades out toward the goal, so the
//! demonstrations fan out early and agree near the insertion.

use std::f64::consts::PI;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use rand::{Rng, RngCore};
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};
use crate::promp::Demonstration;

pub const DEMO_HEADER: [&str; 8] = ["t", "px", "py", "pz", "qw", "qx", "qy", "qz"];
/// Largest accepted deviation of a quaternion norm from 1 in demo files.
pub const QUATERNION_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DemoGenConfig {
    pub n_demos: usize,
    /// Center of the start box (target frame, meters).
    pub start_center: [f64; 3],
    /// Half-widths of the start box.
    pub start_halfwidths: [f64; 3],
    /// Start yaw is uniform in `±start_max_yaw` (radians).
    pub start_max_yaw: f64,
    /// Mean waypoint above the channel mouth.
    pub waypoint: [f64; 3],
    /// Per-axis standard deviation of the waypoint.
    pub waypoint_spread: f64,
    /// Phase at which the waypoint is reached.
    pub waypoint_phase: f64,
    /// Phase at which the goal is reached; the demo holds afterwards.
    pub arrive_phase: f64,
    pub goal: Pose,
    /// Each demo ends uniformly within this many meters of the goal per axis.
    pub end_spread: f64,
    /// Stationary standard deviation of the correlated position noise.
    pub noise_std: f64,
    /// Correlation of consecutive noise samples, in `[0, 1)`.
    pub noise_correlation: f64,
    pub n_samples: usize,
    pub duration: f64,
}

impl Default for DemoGenConfig {
    fn default() -> Self {
        DemoGenConfig {
            n_demos: 5,
            start_center: [0.10, 0.06, 0.12],
            start_halfwidths: [0.03, 0.03, 0.02],
            start_max_yaw: 15.0 * PI / 180.0,
            waypoint: [0.0, 0.0, 0.03],
            waypoint_spread: 0.002,
            waypoint_phase: 0.6,
            arrive_phase: 1.0,
            goal: Pose::from_position(Vec3::new(0.0, 0.0, -0.0175)),
            end_spread: 0.0004,
            noise_std: 0.003,
            noise_correlation: 0.95,
            n_samples: 200,
            duration: 10.0,
        }
    }
}

impl DemoGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_demos < 2 {
            return Err(Error::config("n_demos", "must be at least 2"));
        }
        if self.n_samples < 2 {
            return Err(Error::config("n_samples", "must be at least 2"));
        }
        if !(self.duration > 0.0) {
            return Err(Error::config("duration", "must be positive"));
        }
        if !(self.end_spread >= 0.0) {
            return Err(Error::config("end_spread", "must be non-negative"));
        }
        if !(self.noise_std >= 0.0) || !(self.waypoint_spread >= 0.0) || !(self.start_max_yaw >= 0.0) {
            return Err(Error::config("noise_std/waypoint_spread/start_max_yaw", "must be non-negative"));
        }
        if self.start_halfwidths.iter().any(|h| !(*h >= 0.0)) {
            return Err(Error::config("start_halfwidths", "must be non-negative"));
        }
        if !(0.0..1.0).contains(&self.noise_correlation) {
            return Err(Error::config("noise_correlation", "must lie in [0, 1)"));
        }
        if !(0.0 < self.waypoint_phase && self.waypoint_phase < self.arrive_phase && self.arrive_phase <= 1.0) {
            return Err(Error::config("waypoint_phase/arrive_phase", "need 0 < waypoint_phase < arrive_phase <= 1"));
        }
        Ok(())
    }
}

/// Quintic minimum-jerk blend from 0 to 1 over `s ∈ [0, 1]`.
fn min_jerk(s: f64) -> f64 {
    let s = s.clamp(0.0, 1.0);
    s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)
}

/// Generates `cfg.n_demos` demonstrations.
pub fn generate(cfg: &DemoGenConfig, rng: &mut dyn RngCore) -> Result<Vec<Demonstration>> {
    cfg.validate()?;
    let ts: Vec<f64> = (0..cfg.n_samples).map(|k| cfg.duration * k as f64 / (cfg.n_samples - 1) as f64).collect();
    let innovation = Normal::new(0.0, cfg.noise_std * (1.0 - cfg.noise_correlation.powi(2)).sqrt())
        .map_err(|e| Error::config("noise_std", e.to_string()))?;
    let spread = Normal::new(0.0, cfg.waypoint_spread).map_err(|e| Error::config("waypoint_spread", e.to_string()))?;
    let mut demos = Vec::with_capacity(cfg.n_demos);
    for _ in 0..cfg.n_demos {
        let mut start = Vec3::from(cfg.start_center);
        for i in 0..3 {
            let h = cfg.start_halfwidths[i];
            if h > 0.0 {
                start[i] += rng.random_range(-h..=h);
            }
        }
        let yaw = if cfg.start_max_yaw > 0.0 { rng.random_range(-cfg.start_max_yaw..=cfg.start_max_yaw) } else { 0.0 };
        let q_start = Quaternion::from_axis_angle(&Vec3::z(), yaw) * cfg.goal.q;
        let mut waypoint = Vec3::from(cfg.waypoint);
        for i in 0..3 {
            waypoint[i] += spread.sample(rng);
        }

        let mut end = cfg.goal.p;
        if cfg.end_spread > 0.0 {
            for i in 0..3 {
                end[i] += rng.random_range(-cfg.end_spread..=cfg.end_spread);
            }
        }

        let mut noise = Vec3::from_fn(|_, _| cfg.noise_std * Normal::new(0.0, 1.0).unwrap().sample(rng));
        let mut poses = Vec::with_capacity(cfg.n_samples);
        for k in 0..cfg.n_samples {
            let z = k as f64 / (cfg.n_samples - 1) as f64;
            if k > 0 {
                noise = noise * cfg.noise_correlation + Vec3::from_fn(|_, _| innovation.sample(rng));
            }
            let p = if z <= cfg.waypoint_phase {
                start.lerp(&waypoint, min_jerk(z / cfg.waypoint_phase))
            } else {
                let s = (z - cfg.waypoint_phase) / (cfg.arrive_phase - cfg.waypoint_phase);
                waypoint.lerp(&end, min_jerk(s))
            };
            let fade = (1.0 - z / cfg.arrive_phase).max(0.0);
            let q = q_start.slerp(&cfg.goal.q, min_jerk(z / cfg.waypoint_phase));
            poses.push(Pose::new(p + noise * fade, q));
        }
        demos.push(Demonstration::new(ts.clone(), poses)?);
    }
    Ok(demos)
}

pub fn write_demo<W: Write>(demo: &Demonstration, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(DEMO_HEADER)?;
    for (t, pose) in demo.timestamps().iter().zip(demo.poses()) {
        let mut rec = vec![t.to_string()];
        rec.extend(pose.to_array().iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

/// Parses a demonstration CSV. Columns are located by header name; row
/// numbers in errors count the header as row 1.
pub fn read_demo<R: Read>(input: R) -> Result<Demonstration> {
    let mut r = csv::Reader::from_reader(input);
    let headers = r.headers()?.clone();
    let mut cols = [0usize; 8];
    for (k, name) in DEMO_HEADER.iter().enumerate() {
        cols[k] = headers
            .iter()
            .position(|h| h.trim() == *name)
            .ok_or_else(|| Error::InvalidInput(format!("missing column `{name}`")))?;
    }
    let mut ts = Vec::new();
    let mut poses = Vec::new();
    for (k, rec) in r.records().enumerate() {
        let row = k + 2;
        let rec = rec?;
        let mut v = [0.0; 8];
        for (j, &c) in cols.iter().enumerate() {
            let field = rec.get(c).ok_or_else(|| Error::InvalidInput(format!("row {row}: missing field `{}`", DEMO_HEADER[j])))?;
            v[j] = field
                .trim()
                .parse()
                .map_err(|_| Error::InvalidInput(format!("row {row}: `{}` is not a number: {field:?}", DEMO_HEADER[j])))?;
        }
        let q = Quaternion::new(v[4], v[5], v[6], v[7]);
        if (q.norm() - 1.0).abs() > QUATERNION_NORM_TOLERANCE {
            return Err(Error::InvalidInput(format!("row {row}: quaternion norm {:.6} is not 1", q.norm())));
        }
        if let Some(&last) = ts.last() {
            if !(v[0] > last) {
                return Err(Error::InvalidInput(format!("row {row}: timestamp {} does not increase", v[0])));
            }
        }
        ts.push(v[0]);
        poses.push(Pose::new(Vec3::new(v[1], v[2], v[3]), q.normalize()));
    }
    Demonstration::new(ts, poses)
}

pub fn save_demo(demo: &Demonstration, path: impl AsRef<Path>) -> Result<()> {
    write_demo(demo, std::fs::File::create(path)?)
}

pub fn load_demo(path: impl AsRef<Path>) -> Result<Demonstration> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::file(path, e.to_string()))?;
    read_demo(file).map_err(|e| match e {
        Error::File { .. } => e,
        other => Error::file(path, other.to_string()),
    })
}

/// Writes `demo_000.csv`, `demo_001.csv`, ... into `dir`.
pub fn save_demo_dir(demos: &[Demonstration], dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    let mut paths = Vec::with_capacity(demos.len());
    for (k, d) in demos.iter().enumerate() {
        let path = dir.join(format!("demo_{k:03}.csv"));
        save_demo(d, &path)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Loads every `*.csv` in `dir`, sorted by file name.
pub fn load_demo_dir(dir: impl AsRef<Path>) -> Result<Vec<Demonstration>> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::file(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::file(dir, "no demonstration CSV files"));
    }
    paths.iter().map(load_demo).collect()
}
