//! Experiment pipeline: demonstrations → ProMP → nominal trajectories →
//! residual training and evaluation, with file outputs for every stage.
//!
//! All randomness derives from one seed through named ChaCha streams, so a
//! component can be reseeded without disturbing the others.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::demos::{self, DemoGenConfig};
use crate::env::{BoxStart, EnvConfig, EpisodeLog, InsertionEnv, InsertionScene};
use crate::error::{Error, Result};
use crate::geometry::{Pose, Quaternion, Vec3};
use crate::promp::{
    basis_grid_search, fit, nominal_trajectory, orientation_schedule, phase, Demonstration, FitConfig,
    NominalOptions, NominalTrajectory, OrientationAveraging, ProMP, ProMPFile,
};
use crate::residual::{default_variance_eps, rollout, AdaptationStrategy, ConfidenceStart, ResidualAgent, SacLearner, ZeroAgent};
use crate::sac::{ReplayBuffer, SacAgent, SacConfig};

/// Independent random streams derived from the experiment seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    DemoGen = 1,
    Env = 2,
    PolicyInit = 3,
    Sampling = 4,
}

pub fn substream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// Distance threshold used when the strategy string is a bare `distance`.
pub const DEFAULT_DISTANCE_THRESHOLD: f64 = 0.04;
/// Basis counts compared by the fit command.
pub const BASIS_GRID: [usize; 4] = [5, 10, 15, 20];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    /// Seed for demonstration synthesis; the experiment seed when unset.
    pub demo_seed: Option<u64>,
    pub scene: InsertionScene,
    /// Scene JSON overriding `scene`.
    pub scene_path: Option<PathBuf>,
    pub env: EnvConfig,
    /// Directory of demonstration CSVs; generated when unset.
    pub demos_dir: Option<PathBuf>,
    pub demo_gen: DemoGenConfig,
    /// Fitted model to use instead of fitting from demonstrations.
    pub model_path: Option<PathBuf>,
    pub fit: FitConfig,
    pub orientation_averaging: OrientationAveraging,
    pub nominal: NominalOptions,
    /// `nominal | always | variance[:<eps>] | distance[:<meters>]`; bare
    /// `variance` takes ε from the fitted model.
    pub strategy: String,
    pub sac: SacConfig,
    pub episodes: usize,
    pub trials: usize,
    /// Starts are drawn in the demonstration start box and kept if inside
    /// this many standard deviations at phase 0.
    pub start_confidence_k: f64,
    /// Evaluate with the policy mean instead of sampling.
    pub eval_deterministic: bool,
    pub log_obs_std: f64,
    pub out: PathBuf,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let sac = SacConfig { obs_scale: Some(vec![0.05, 0.05, 0.05, 1.0, 1.0, 1.0, 1.0]), ..SacConfig::default() };
        ExperimentConfig {
            seed: 0,
            demo_seed: None,
            scene: InsertionScene::default(),
            scene_path: None,
            env: EnvConfig::default(),
            demos_dir: None,
            demo_gen: DemoGenConfig::default(),
            model_path: None,
            fit: FitConfig::default(),
            orientation_averaging: OrientationAveraging::PerStep,
            nominal: NominalOptions::default(),
            strategy: "variance".into(),
            sac,
            episodes: 300,
            trials: 5,
            start_confidence_k: 2.0,
            eval_deterministic: false,
            log_obs_std: 1e-3,
            out: PathBuf::from("runs"),
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))?;
        let cfg: ExperimentConfig = serde_json::from_str(&text).map_err(|e| Error::file(path, e.to_string()))?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        self.scene.validate()?;
        self.demo_gen.validate()?;
        self.sac.validate(7)?;
        if self.sac.action_dim() != 6 {
            return Err(Error::config("sac.action_limits", "need 6 entries (3 position, 3 rotation)"));
        }
        if self.fit.n_basis == 0 {
            return Err(Error::config("fit.n_basis", "must be positive"));
        }
        if self.env.horizon < 2 {
            return Err(Error::config("env.horizon", "must be at least 2"));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be positive"));
        }
        if !(self.start_confidence_k > 0.0) {
            return Err(Error::config("start_confidence_k", "must be positive"));
        }
        if !(self.log_obs_std > 0.0) {
            return Err(Error::config("log_obs_std", "must be positive"));
        }
        parse_strategy_spec(&self.strategy)?;
        Ok(())
    }

    pub fn demo_seed(&self) -> u64 {
        self.demo_seed.unwrap_or(self.seed)
    }

    pub fn resolved_scene(&self) -> Result<InsertionScene> {
        match &self.scene_path {
            None => Ok(self.scene.clone()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| Error::file(p, e.to_string()))?;
                let scene: InsertionScene = serde_json::from_str(&text).map_err(|e| Error::file(p, e.to_string()))?;
                scene.validate()?;
                Ok(scene)
            }
        }
    }

    fn start_proposal(&self) -> BoxStart {
        BoxStart {
            center: Pose::new(Vec3::from(self.demo_gen.start_center), self.demo_gen.goal.q),
            half_extents: Vec3::from(self.demo_gen.start_halfwidths),
            max_yaw: self.demo_gen.start_max_yaw,
        }
    }
}

enum StrategySpec {
    Resolved(AdaptationStrategy),
    VarianceAuto,
}

fn parse_strategy_spec(s: &str) -> Result<StrategySpec> {
    match s.trim() {
        "variance" => Ok(StrategySpec::VarianceAuto),
        "distance" => Ok(StrategySpec::Resolved(AdaptationStrategy::DistanceBased { threshold: DEFAULT_DISTANCE_THRESHOLD })),
        other => Ok(StrategySpec::Resolved(other.parse()?)),
    }
}

/// Everything an episode needs that does not change between episodes.
pub struct Pipeline {
    pub cfg: ExperimentConfig,
    pub scene: InsertionScene,
    pub demos: Vec<Demonstration>,
    pub model: ProMP,
    pub orientations: Vec<Quaternion>,
    pub strategy: AdaptationStrategy,
}

impl Pipeline {
    /// Loads or generates demonstrations, fits (or loads) the model and
    /// resolves the strategy.
    pub fn build(cfg: &ExperimentConfig) -> Result<Self> {
        cfg.validate()?;
        let scene = cfg.resolved_scene()?;
        let horizon = cfg.env.horizon;
        let demos = load_or_generate_demos(cfg)?;
        let (model, orientations) = match &cfg.model_path {
            Some(p) => {
                let file = ProMPFile::load(p)?;
                let model = file.to_model().map_err(|e| Error::file(p, e.to_string()))?;
                let orientations = match file.orientations() {
                    Some(o) if o.len() == horizon => o,
                    _ => orientation_schedule(&demos, horizon, cfg.orientation_averaging)?,
                };
                (model, orientations)
            }
            None => (fit(&demos, &cfg.fit)?, orientation_schedule(&demos, horizon, cfg.orientation_averaging)?),
        };
        if model.dim() != 3 {
            return Err(Error::InvalidInput(format!("model encodes {} dimensions, positions need 3", model.dim())));
        }
        let strategy = match parse_strategy_spec(&cfg.strategy)? {
            StrategySpec::Resolved(s) => s,
            StrategySpec::VarianceAuto => AdaptationStrategy::VarianceBased { eps: default_variance_eps(&model) },
        };
        let mut resolved = cfg.clone();
        resolved.strategy = strategy.to_string();
        resolved.scene = scene.clone();
        resolved.scene_path = None;
        Ok(Pipeline { cfg: resolved, scene, demos, model, orientations, strategy })
    }

    pub fn env(&self) -> Result<InsertionEnv> {
        InsertionEnv::new(self.scene.clone(), self.cfg.env.clone())
    }

    pub fn start_sampler(&self) -> ConfidenceStart<'_> {
        ConfidenceStart { promp: &self.model, proposal: self.cfg.start_proposal(), k: self.cfg.start_confidence_k, max_tries: 10_000 }
    }

    pub fn nominal(&self, start: &Pose) -> Result<NominalTrajectory> {
        let object_start = *start * self.cfg.env.grasp.inverse();
        nominal_trajectory(&self.model, &object_start, self.cfg.env.horizon, &self.orientations, &self.cfg.nominal)
    }

    pub fn model_file(&self) -> ProMPFile {
        ProMPFile::from_model(&self.model, Some(&self.orientations))
    }

    pub fn new_agent(&self, seed: u64) -> Result<SacAgent> {
        let mut init = substream(seed, Stream::PolicyInit);
        SacAgent::new(7, self.cfg.sac.clone(), &mut init, substream(seed, Stream::Sampling))
    }
}

fn load_or_generate_demos(cfg: &ExperimentConfig) -> Result<Vec<Demonstration>> {
    match &cfg.demos_dir {
        Some(dir) => demos::load_demo_dir(dir),
        None => demos::generate(&cfg.demo_gen, &mut substream(cfg.demo_seed(), Stream::DemoGen)),
    }
}

/// One row of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpisodeRecord {
    pub episode: usize,
    pub steps: usize,
    #[serde(rename = "return")]
    pub ret: f64,
    pub success: bool,
    pub alpha: f64,
    pub actor_loss: Option<f64>,
    pub critic_loss: Option<f64>,
}

pub const TRAIN_LOG_HEADER: [&str; 7] = ["episode", "steps", "return", "success", "alpha", "actor_loss", "critic_loss"];

pub fn write_train_log<W: Write>(records: &[EpisodeRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(TRAIN_LOG_HEADER)?;
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in records {
        w.write_record([
            r.episode.to_string(),
            r.steps.to_string(),
            r.ret.to_string(),
            (r.success as u8).to_string(),
            r.alpha.to_string(),
            opt(r.actor_loss),
            opt(r.critic_loss),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub struct TrialResult {
    pub seed: u64,
    pub records: Vec<EpisodeRecord>,
    pub learner: SacLearner,
    pub last_log: Option<EpisodeLog>,
}

impl TrialResult {
    pub fn success_rate(&self, range: std::ops::Range<usize>) -> f64 {
        mean(self.records[range].iter().map(|r| r.success as u8 as f64))
    }

    pub fn mean_return(&self, range: std::ops::Range<usize>) -> f64 {
        mean(self.records[range].iter().map(|r| r.ret))
    }
}

fn mean(it: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = it.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

/// Trains one agent for `pipeline.cfg.episodes` episodes.
pub fn run_trial(pipeline: &Pipeline, seed: u64) -> Result<TrialResult> {
    let cfg = &pipeline.cfg;
    let mut env = pipeline.env()?;
    let sampler = pipeline.start_sampler();
    let mut env_rng = substream(seed, Stream::Env);
    let agent = pipeline.new_agent(seed)?;
    let mut learner = SacLearner::new(agent, ReplayBuffer::new(cfg.sac.buffer_capacity)?);
    let mut records = Vec::with_capacity(cfg.episodes);
    let mut last_log = None;
    for episode in 0..cfg.episodes {
        let start = env.reset(&sampler, env_rng.next_u64());
        let nominal = pipeline.nominal(&start.pose)?;
        let log = rollout(&mut env, &nominal, &mut learner, &pipeline.strategy)?;
        let losses = learner.take_mean_losses();
        records.push(EpisodeRecord {
            episode,
            steps: log.steps(),
            ret: log.total_reward(),
            success: log.success(),
            alpha: learner.agent.alpha(),
            actor_loss: losses.map(|l| l.0),
            critic_loss: losses.map(|l| l.1),
        });
        last_log = Some(log);
    }
    Ok(TrialResult { seed, records, learner, last_log })
}

/// Runs `cfg.trials` trials with seeds `seed, seed + 1, ...` on separate
/// threads. Demonstrations come from the base seed for every trial.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<(Pipeline, Vec<TrialResult>)> {
    let mut base = cfg.clone();
    base.demo_seed = Some(cfg.demo_seed());
    let pipeline = Pipeline::build(&base)?;
    let results = std::thread::scope(|s| {
        let p = &pipeline;
        let handles: Vec<_> = (0..cfg.trials as u64).map(|i| s.spawn(move || run_trial(p, cfg.seed + i))).collect();
        handles.into_iter().map(|h| h.join().expect("trial thread panicked")).collect::<Result<Vec<_>>>()
    })?;
    Ok((pipeline, results))
}

fn write_sidecar(path: &Path, cfg: &ExperimentConfig) -> Result<()> {
    fs::write(sidecar_path(path), serde_json::to_string_pretty(cfg)?)?;
    Ok(())
}

/// Sidecar path for an output file: `x.csv` → `x.csv.config.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".config.json");
    path.with_file_name(name)
}

/// Writes demonstration CSVs to `<out>/demos/`.
pub fn cmd_gen_demos(cfg: &ExperimentConfig) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let demos = demos::generate(&cfg.demo_gen, &mut substream(cfg.demo_seed(), Stream::DemoGen))?;
    let dir = cfg.out.join("demos");
    let paths = demos::save_demo_dir(&demos, &dir)?;
    for p in &paths {
        write_sidecar(p, cfg)?;
    }
    Ok(paths)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    pub model_path: PathBuf,
    pub grid: Vec<(usize, f64)>,
}

/// Fits the model, writes `<out>/promp.json` and a log-likelihood table over
/// basis counts to `<out>/basis_grid.csv`.
pub fn cmd_fit(cfg: &ExperimentConfig) -> Result<FitReport> {
    let pipeline = Pipeline::build(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let model_path = cfg.out.join("promp.json");
    pipeline.model_file().save(&model_path)?;
    write_sidecar(&model_path, &pipeline.cfg)?;
    let grid = basis_grid_search(&pipeline.demos, &BASIS_GRID, &cfg.fit, cfg.log_obs_std)?;
    let grid_path = cfg.out.join("basis_grid.csv");
    let mut w = csv::Writer::from_path(&grid_path)?;
    w.write_record(["n_basis", "log_likelihood"])?;
    for (n, ll) in &grid {
        w.write_record([n.to_string(), ll.to_string()])?;
    }
    w.flush()?;
    write_sidecar(&grid_path, &pipeline.cfg)?;
    Ok(FitReport { model_path, grid })
}

pub const CONDITIONED_HEADER: [&str; 12] = ["t", "z", "px", "py", "pz", "qw", "qx", "qy", "qz", "sigma_x", "sigma_y", "sigma_z"];

/// Conditions on `start` (end-effector pose) and writes
/// `<out>/conditioned.csv` with the nominal poses and prior std.
pub fn cmd_condition(cfg: &ExperimentConfig, start: &Pose) -> Result<PathBuf> {
    let pipeline = Pipeline::build(cfg)?;
    let nominal = pipeline.nominal(start)?;
    fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join("conditioned.csv");
    let mut w = csv::Writer::from_path(&path)?;
    w.write_record(CONDITIONED_HEADER)?;
    for (t, (pose, s)) in nominal.poses.iter().zip(&nominal.std).enumerate() {
        let mut rec = vec![t.to_string(), phase(t, nominal.len())?.to_string()];
        rec.extend(pose.to_array().iter().map(|v| v.to_string()));
        rec.extend(s.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    write_sidecar(&path, &pipeline.cfg)?;
    Ok(path)
}

/// Trains all trials; per trial writes `trial_<seed>/train.csv`,
/// `checkpoint.json` and the last episode log, each with a sidecar.
pub fn cmd_train(cfg: &ExperimentConfig) -> Result<Vec<TrialResult>> {
    let (pipeline, results) = run_trials(cfg)?;
    fs::create_dir_all(&cfg.out)?;
    let model_path = cfg.out.join("promp.json");
    pipeline.model_file().save(&model_path)?;
    write_sidecar(&model_path, &pipeline.cfg)?;
    for r in &results {
        let dir = cfg.out.join(format!("trial_{}", r.seed));
        fs::create_dir_all(&dir)?;
        let mut trial_cfg = pipeline.cfg.clone();
        trial_cfg.seed = r.seed;
        trial_cfg.trials = 1;
        trial_cfg.out = dir.clone();

        let log_path = dir.join("train.csv");
        write_train_log(&r.records, fs::File::create(&log_path)?)?;
        write_sidecar(&log_path, &trial_cfg)?;
        let ckpt = dir.join("checkpoint.json");
        r.learner.agent.save(&ckpt)?;
        write_sidecar(&ckpt, &trial_cfg)?;
        if let Some(log) = &r.last_log {
            let p = dir.join("last_episode.csv");
            log.save_csv(&p)?;
            write_sidecar(&p, &trial_cfg)?;
        }
    }
    Ok(results)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalSummary {
    pub episodes: usize,
    pub success_rate: f64,
    pub mean_return: f64,
    /// Mean episode length over successful episodes; `None` without any.
    pub mean_steps_to_success: Option<f64>,
}

/// Runs `episodes` episodes without learning. With no checkpoint the
/// residual is zero.
pub fn evaluate(pipeline: &Pipeline, agent: Option<SacAgent>, episodes: usize, seed: u64) -> Result<(EvalSummary, Vec<EpisodeLog>)> {
    let mut env = pipeline.env()?;
    let sampler = pipeline.start_sampler();
    let mut env_rng = substream(seed, Stream::Env);
    let mut zero = ZeroAgent { action_dim: 6 };
    let mut learner = agent.map(|a| {
        let mut l = SacLearner::new(a, ReplayBuffer::new(1).expect("capacity 1"));
        l.train = false;
        l.deterministic = pipeline.cfg.eval_deterministic;
        l
    });
    let mut logs = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let start = env.reset(&sampler, env_rng.next_u64());
        let nominal = pipeline.nominal(&start.pose)?;
        let policy: &mut dyn ResidualAgent = match learner.as_mut() {
            Some(l) => l,
            None => &mut zero,
        };
        logs.push(rollout(&mut env, &nominal, policy, &pipeline.strategy)?);
    }
    let succ: Vec<&EpisodeLog> = logs.iter().filter(|l| l.success()).collect();
    let summary = EvalSummary {
        episodes,
        success_rate: if episodes == 0 { 0.0 } else { succ.len() as f64 / episodes as f64 },
        mean_return: mean(logs.iter().map(|l| l.total_reward())),
        mean_steps_to_success: if succ.is_empty() { None } else { Some(mean(succ.iter().map(|l| l.steps() as f64))) },
    };
    Ok((summary, logs))
}

/// Evaluates a checkpoint; writes `<out>/eval.json` and per-episode logs
/// under `<out>/eval/`.
pub fn cmd_eval(cfg: &ExperimentConfig, checkpoint: Option<&Path>, episodes: usize) -> Result<EvalSummary> {
    let pipeline = Pipeline::build(cfg)?;
    let agent = checkpoint.map(SacAgent::load).transpose()?;
    let (summary, logs) = evaluate(&pipeline, agent, episodes, cfg.seed)?;
    let dir = cfg.out.join("eval");
    fs::create_dir_all(&dir)?;
    for (k, log) in logs.iter().enumerate() {
        log.save_csv(dir.join(format!("episode_{k:03}.csv")))?;
    }
    let path = cfg.out.join("eval.json");
    fs::write(&path, serde_json::to_string_pretty(&summary)?)?;
    write_sidecar(&path, &pipeline.cfg)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick_cfg(out: &Path) -> ExperimentConfig {
        ExperimentConfig { episodes: 3, trials: 2, out: out.to_path_buf(), ..ExperimentConfig::default() }
    }

    #[test]
    fn substreams_differ() {
        let mut a = substream(1, Stream::Env);
        let mut b = substream(1, Stream::Sampling);
        let mut c = substream(1, Stream::Env);
        let x = a.next_u64();
        assert_ne!(x, b.next_u64());
        assert_eq!(x, c.next_u64());
    }

    #[test]
    fn config_json_round_trip_and_unknown_fields() {
        let cfg = ExperimentConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        let back: ExperimentConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back, cfg);
        let partial: ExperimentConfig = serde_json::from_str(r#"{"seed": 9, "strategy": "always"}"#).unwrap();
        assert_eq!(partial.seed, 9);
        assert_eq!(partial.episodes, 300);
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"sead": 9}"#).is_err());
    }

    #[test]
    fn invalid_fields_are_named() {
        let mut cfg = ExperimentConfig::default();
        cfg.strategy = "sometimes".into();
        let err = cfg.validate().unwrap_err();
        assert!(err.is_config_error());
        assert!(err.to_string().contains("strategy"));
        let mut cfg = ExperimentConfig::default();
        cfg.sac.lr = -1.0;
        assert!(cfg.validate().unwrap_err().to_string().contains("lr"));
    }

    #[test]
    fn bare_variance_resolves_to_model_eps() {
        let p = Pipeline::build(&ExperimentConfig::default()).unwrap();
        let expected = default_variance_eps(&p.model);
        assert_eq!(p.strategy, AdaptationStrategy::VarianceBased { eps: expected });
        assert_eq!(p.cfg.strategy, format!("variance:{expected}"));
    }

    #[test]
    fn train_outputs_are_reproducible() {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        cmd_train(&quick_cfg(a.path())).unwrap();
        cmd_train(&quick_cfg(b.path())).unwrap();
        for f in ["trial_0/train.csv", "trial_1/train.csv", "trial_0/last_episode.csv", "trial_1/checkpoint.json", "promp.json"] {
            let x = fs::read(a.path().join(f)).unwrap();
            let y = fs::read(b.path().join(f)).unwrap();
            assert_eq!(x, y, "{f} differs");
            assert!(sidecar_path(&a.path().join(f)).exists());
        }
        let header = fs::read_to_string(a.path().join("trial_0/train.csv")).unwrap();
        assert!(header.starts_with("episode,steps,return,success,alpha,actor_loss,critic_loss\n"));
    }

    #[test]
    fn sidecar_reruns_the_trial() {
        let a = tempfile::tempdir().unwrap();
        cmd_train(&quick_cfg(a.path())).unwrap();
        let side = ExperimentConfig::load(sidecar_path(&a.path().join("trial_1/train.csv"))).unwrap();
        let b = tempfile::tempdir().unwrap();
        let rerun = ExperimentConfig { out: b.path().to_path_buf(), ..side };
        cmd_train(&rerun).unwrap();
        assert_eq!(
            fs::read(a.path().join("trial_1/train.csv")).unwrap(),
            fs::read(b.path().join("trial_1/train.csv")).unwrap()
        );
    }

    #[test]
    fn fit_grid_is_complete_and_finite() {
        let dir = tempfile::tempdir().unwrap();
        let report = cmd_fit(&quick_cfg(dir.path())).unwrap();
        assert_eq!(report.grid.iter().map(|g| g.0).collect::<Vec<_>>(), BASIS_GRID.to_vec());
        assert!(report.grid.iter().all(|g| g.1.is_finite()));
        let file = ProMPFile::load(&report.model_path).unwrap();
        assert_eq!(file.n_basis, 10);
    }

    #[test]
    fn nominal_training_never_succeeds_and_never_learns() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { strategy: "nominal".into(), ..quick_cfg(dir.path()) };
        let results = cmd_train(&cfg).unwrap();
        for r in &results {
            assert!(r.records.iter().all(|e| !e.success && e.actor_loss.is_none()));
            assert!(r.learner.buffer.is_empty());
        }
    }

    #[test]
    fn eval_untrained_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ExperimentConfig { episodes: 0, trials: 1, ..quick_cfg(dir.path()) };
        cmd_train(&cfg).unwrap();
        let ckpt = dir.path().join("trial_0/checkpoint.json");
        let summary = cmd_eval(&cfg, Some(&ckpt), 4).unwrap();
        assert!((0.0..=1.0).contains(&summary.success_rate));
        assert!(summary.mean_return.is_finite());
        assert!(dir.path().join("eval/episode_003.csv").exists());
    }
}
