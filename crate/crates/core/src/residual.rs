//! Residual policy on top of the nominal ProMP trajectory.
//!
//! Each step a strategy picks adaptation weights `(α, β) ∈ {0, 1}²`: `α`
//! switches the nominal setpoint on, `β` the learned correction.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::env::{BoxStart, EpisodeLog, InsertionEnv, LogRow, StartSampler};
use crate::error::{Error, Result};
use crate::geometry::{axis_angle_to_quat, AxisAngle, Pose, Vec3};
use crate::promp::{NominalTrajectory, ProMP};
use crate::sac::{ActionSample, ReplayBuffer, SacAgent, Transition, UpdateStats};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum AdaptationStrategy {
    /// Nominal trajectory only; the residual never acts.
    NominalOnly,
    /// Residual added on every step.
    AlwaysOn,
    /// Residual added once the smallest per-axis demonstration standard
    /// deviation is at most `eps` meters.
    VarianceBased { eps: f64 },
    /// Nominal until within `threshold` meters of the goal, residual alone
    /// afterwards.
    DistanceBased { threshold: f64 },
}

/// Adaptation weights for one step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Gate {
    pub alpha: bool,
    pub beta: bool,
}

impl Gate {
    pub const NOMINAL: Gate = Gate { alpha: true, beta: false };
}

impl fmt::Display for AdaptationStrategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdaptationStrategy::NominalOnly => write!(f, "nominal"),
            AdaptationStrategy::AlwaysOn => write!(f, "always"),
            AdaptationStrategy::VarianceBased { eps } => write!(f, "variance:{eps}"),
            AdaptationStrategy::DistanceBased { threshold } => write!(f, "distance:{threshold}"),
        }
    }
}

impl FromStr for AdaptationStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::config("strategy", format!("expected nominal | always | variance:<eps> | distance:<meters>, got {s:?}"));
        let parse_pos = |v: &str| -> Result<f64> {
            let x: f64 = v.trim().parse().map_err(|_| bad())?;
            if x > 0.0 && x.is_finite() {
                Ok(x)
            } else {
                Err(Error::config("strategy", format!("threshold must be positive, got {v}")))
            }
        };
        match s.trim().split_once(':') {
            None => match s.trim() {
                "nominal" => Ok(AdaptationStrategy::NominalOnly),
                "always" => Ok(AdaptationStrategy::AlwaysOn),
                _ => Err(bad()),
            },
            Some(("variance", v)) => Ok(AdaptationStrategy::VarianceBased { eps: parse_pos(v)? }),
            Some(("distance", v)) => Ok(AdaptationStrategy::DistanceBased { threshold: parse_pos(v)? }),
            Some(_) => Err(bad()),
        }
    }
}

impl TryFrom<String> for AdaptationStrategy {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<AdaptationStrategy> for String {
    fn from(s: AdaptationStrategy) -> String {
        s.to_string()
    }
}

impl AdaptationStrategy {
    /// True for strategies that may call the learned policy.
    pub fn uses_residual(&self) -> bool {
        !matches!(self, AdaptationStrategy::NominalOnly)
    }
}

/// Adaptation weights given the unconditioned per-axis std at this step and
/// the current observation.
pub fn gate(strategy: &AdaptationStrategy, sigma: &Vec3, obs: &Pose, goal: &Pose) -> Gate {
    match *strategy {
        AdaptationStrategy::NominalOnly => Gate::NOMINAL,
        AdaptationStrategy::AlwaysOn => Gate { alpha: true, beta: true },
        AdaptationStrategy::VarianceBased { eps } => Gate { alpha: true, beta: sigma.min() <= eps },
        AdaptationStrategy::DistanceBased { threshold } => {
            if (obs.p - goal.p).norm() < threshold {
                Gate { alpha: false, beta: true }
            } else {
                Gate::NOMINAL
            }
        }
    }
}

/// β per step when it depends on time alone; `None` for the distance gate.
pub fn beta_schedule(strategy: &AdaptationStrategy, std: &[Vec3]) -> Option<Vec<u8>> {
    match strategy {
        AdaptationStrategy::DistanceBased { .. } => None,
        s => Some(std.iter().map(|sig| gate(s, sig, &Pose::identity(), &Pose::identity()).beta as u8).collect()),
    }
}

/// Default variance threshold: the smallest per-axis std at 85% phase.
pub fn default_variance_eps(promp: &ProMP) -> f64 {
    promp.std_at(0.85).min()
}

/// Setpoint from the nominal pose and a residual `(δp, δν)`. Without the
/// nominal term the residual moves the last commanded setpoint instead.
pub fn combine(gate: Gate, nominal: &Pose, last: &Pose, dp: &Vec3, dnu: &Vec3) -> Pose {
    let base = if gate.alpha { nominal } else { last };
    if !gate.beta {
        return *base;
    }
    if *dnu == Vec3::zeros() {
        // exact identity, no renormalization round-off
        return Pose::new(base.p + dp, base.q);
    }
    let dq = axis_angle_to_quat(&AxisAngle(*dnu));
    Pose::new(base.p + dp, dq * base.q)
}

/// Source of residual actions that may also learn from the outcome.
pub trait ResidualAgent {
    /// Residual for the 7-dimensional observation, environment units.
    fn act(&mut self, obs: &[f64]) -> ActionSample;
    /// Called once per step on which the residual was active.
    fn observe(&mut self, transition: Transition) -> Result<()>;
}

/// Always proposes the zero residual and ignores feedback.
pub struct ZeroAgent {
    pub action_dim: usize,
}

impl ResidualAgent for ZeroAgent {
    fn act(&mut self, _obs: &[f64]) -> ActionSample {
        ActionSample { action: vec![0.0; self.action_dim], latent: vec![0.0; self.action_dim], log_prob: 0.0 }
    }

    fn observe(&mut self, _transition: Transition) -> Result<()> {
        Ok(())
    }
}

/// SAC agent with its replay buffer; one gradient update per stored
/// transition when `train` is set.
pub struct SacLearner {
    pub agent: SacAgent,
    pub buffer: ReplayBuffer,
    pub train: bool,
    pub deterministic: bool,
    pub last_stats: Option<UpdateStats>,
    stats_sum: [f64; 2],
    stats_count: usize,
}

impl SacLearner {
    pub fn new(agent: SacAgent, buffer: ReplayBuffer) -> Self {
        SacLearner { agent, buffer, train: true, deterministic: false, last_stats: None, stats_sum: [0.0; 2], stats_count: 0 }
    }

    /// Mean actor and critic loss since the last call, if any update ran.
    pub fn take_mean_losses(&mut self) -> Option<(f64, f64)> {
        if self.stats_count == 0 {
            return None;
        }
        let n = self.stats_count as f64;
        let out = (self.stats_sum[0] / n, self.stats_sum[1] / n);
        self.stats_sum = [0.0; 2];
        self.stats_count = 0;
        Some(out)
    }
}

impl ResidualAgent for SacLearner {
    fn act(&mut self, obs: &[f64]) -> ActionSample {
        self.agent.act(obs, self.deterministic)
    }

    fn observe(&mut self, transition: Transition) -> Result<()> {
        if !self.train {
            return Ok(());
        }
        self.buffer.push(transition);
        if let Some(stats) = self.agent.update(&self.buffer)? {
            self.stats_sum[0] += stats.actor_loss;
            self.stats_sum[1] += stats.critic_loss;
            self.stats_count += 1;
            self.last_stats = Some(stats);
        }
        Ok(())
    }
}

/// Runs one episode from the environment's current state. `nominal` holds
/// interest-object poses; they are mapped to end-effector setpoints through
/// the environment's grasp transform.
pub fn rollout(
    env: &mut InsertionEnv,
    nominal: &NominalTrajectory,
    agent: &mut dyn ResidualAgent,
    strategy: &AdaptationStrategy,
) -> Result<EpisodeLog> {
    let horizon = env.config().horizon;
    if nominal.len() < horizon {
        return Err(Error::InvalidInput(format!("nominal trajectory has {} steps, episode needs {horizon}", nominal.len())));
    }
    if env.is_done() {
        return Err(Error::EpisodeDone);
    }
    let grasp = env.config().grasp;
    let goal = *env.goal();
    let mut log = EpisodeLog::default();
    let mut last = env.observation().pose;
    let mut obs = env.observation();
    for t in 0..horizon {
        let g = gate(strategy, &nominal.std[t], &obs.pose, &goal);
        let sample = if g.beta { Some(agent.act(&obs.to_array())) } else { None };
        let (dp, dnu) = match &sample {
            Some(s) => (Vec3::new(s.action[0], s.action[1], s.action[2]), Vec3::new(s.action[3], s.action[4], s.action[5])),
            None => (Vec3::zeros(), Vec3::zeros()),
        };
        let nominal_ee = nominal.poses[t] * grasp;
        let setpoint = combine(g, &nominal_ee, &last, &dp, &dnu);
        let step = env.step(&setpoint)?;
        log.rows.push(LogRow {
            t,
            pose: obs.pose,
            action_p: dp,
            action_v: dnu,
            beta: g.beta as u8,
            reward: step.reward,
            done: step.done,
            success: step.success,
        });
        if let Some(s) = sample {
            agent.observe(Transition {
                obs: obs.to_array().to_vec(),
                action: s.action,
                latent: s.latent,
                reward: step.reward,
                next_obs: step.observation.to_array().to_vec(),
                done: step.success,
            })?;
        }
        last = setpoint;
        obs = step.observation;
        if step.done {
            break;
        }
    }
    Ok(log)
}

/// Start poses from a box, rejected until the position lies inside the
/// model's `k`-sigma region at phase 0.
pub struct ConfidenceStart<'a> {
    pub promp: &'a ProMP,
    pub proposal: BoxStart,
    pub k: f64,
    pub max_tries: usize,
}

impl StartSampler for ConfidenceStart<'_> {
    fn sample(&self, rng: &mut dyn RngCore) -> Pose {
        for _ in 0..self.max_tries {
            let pose = self.proposal.sample(rng);
            if self.promp.in_confidence_region(0.0, &DVector::from_column_slice(pose.p.as_slice()), self.k) {
                return pose;
            }
        }
        let m = self.promp.mean_at(0.0);
        Pose::new(Vec3::new(m[0], m[1], m[2]), self.proposal.center.q)
    }
}
