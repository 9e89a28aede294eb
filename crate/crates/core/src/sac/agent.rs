use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::mlp::Mlp;
use super::policy::{ActionSample, PolicyBatch, SquashedGaussianPolicy};
use super::replay::ReplayBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SacConfig {
    pub hidden: Vec<usize>,
    pub lr: f64,
    pub gamma: f64,
    pub tau: f64,
    pub batch_size: usize,
    /// Minimum replay size before updates start.
    pub warmup: usize,
    pub buffer_capacity: usize,
    pub init_alpha: f64,
    pub learn_alpha: bool,
    /// Defaults to `-action_dim`.
    pub target_entropy: Option<f64>,
    /// Residual limits in environment units, one per action dimension.
    pub action_limits: Vec<f64>,
    /// Observations enter the networks as `(obs − offset) / scale`.
    pub obs_offset: Option<Vec<f64>>,
    pub obs_scale: Option<Vec<f64>>,
    /// Scales the initial output layer of the actor so means start near zero.
    pub actor_output_scale: f64,
}

impl Default for SacConfig {
    fn default() -> Self {
        let deg = std::f64::consts::PI / 180.0;
        SacConfig {
            hidden: vec![128, 128],
            lr: 3e-4,
            gamma: 0.99,
            tau: 0.005,
            batch_size: 100,
            warmup: 100,
            buffer_capacity: 1_000_000,
            init_alpha: 0.1,
            learn_alpha: true,
            target_entropy: None,
            action_limits: vec![0.005, 0.005, 0.005, 2.0 * deg, 2.0 * deg, 2.0 * deg],
            obs_offset: None,
            obs_scale: None,
            actor_output_scale: 0.01,
        }
    }
}

impl SacConfig {
    pub fn validate(&self, obs_dim: usize) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden", "need at least one positive hidden size"));
        }
        if !(self.lr > 0.0) {
            return Err(Error::config("lr", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(Error::config("gamma", "must lie in [0, 1]"));
        }
        if !(0.0..=1.0).contains(&self.tau) {
            return Err(Error::config("tau", "must lie in [0, 1]"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("batch_size", "must be positive"));
        }
        if self.warmup < 1 {
            return Err(Error::config("warmup", "must be at least 1"));
        }
        if self.buffer_capacity < self.warmup {
            return Err(Error::config("buffer_capacity", "must be at least warmup"));
        }
        if !(self.init_alpha > 0.0) {
            return Err(Error::config("init_alpha", "must be positive"));
        }
        if self.action_limits.is_empty() || self.action_limits.iter().any(|l| !(*l > 0.0)) {
            return Err(Error::config("action_limits", "must be non-empty and positive"));
        }
        if let Some(o) = &self.obs_offset {
            if o.len() != obs_dim {
                return Err(Error::config("obs_offset", format!("must have {obs_dim} entries")));
            }
        }
        if let Some(s) = &self.obs_scale {
            if s.len() != obs_dim || s.iter().any(|v| !(*v > 0.0)) {
                return Err(Error::config("obs_scale", format!("must have {obs_dim} positive entries")));
            }
        }
        Ok(())
    }

    pub fn action_dim(&self) -> usize {
        self.action_limits.len()
    }

    pub fn target_entropy(&self) -> f64 {
        self.target_entropy.unwrap_or(-(self.action_dim() as f64))
    }
}

/// Network-ready minibatch; columns are transitions, actions normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Batch {
    pub obs: DMatrix<f64>,
    pub action: DMatrix<f64>,
    pub reward: DVector<f64>,
    pub next_obs: DMatrix<f64>,
    pub done: DVector<f64>,
}

impl Batch {
    pub fn len(&self) -> usize {
        self.obs.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CriticGrads {
    pub loss: f64,
    pub critic1: Mlp,
    pub critic2: Mlp,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActorGrads {
    pub loss: f64,
    pub actor: Mlp,
    pub mean_log_prob: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UpdateStats {
    pub critic_loss: f64,
    pub actor_loss: f64,
    pub alpha_loss: f64,
    pub alpha: f64,
}

/// Soft actor-critic with twin critics, Polyak-averaged targets and a
/// learned temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SacAgent {
    cfg: SacConfig,
    obs_dim: usize,
    actor: SquashedGaussianPolicy,
    critic1: Mlp,
    critic2: Mlp,
    target1: Mlp,
    target2: Mlp,
    log_alpha: f64,
    actor_opt: Adam,
    critic1_opt: Adam,
    critic2_opt: Adam,
    alpha_opt: Adam,
    updates: u64,
    rng: ChaCha8Rng,
}

impl SacAgent {
    /// Networks are drawn from `init_rng`; action noise and minibatches from
    /// `rng`.
    pub fn new(obs_dim: usize, cfg: SacConfig, init_rng: &mut ChaCha8Rng, rng: ChaCha8Rng) -> Result<Self> {
        cfg.validate(obs_dim)?;
        let a_dim = cfg.action_dim();
        let mut actor_sizes = vec![obs_dim];
        actor_sizes.extend(&cfg.hidden);
        actor_sizes.push(2 * a_dim);
        let mut critic_sizes = vec![obs_dim + a_dim];
        critic_sizes.extend(&cfg.hidden);
        critic_sizes.push(1);

        let mut actor_net = Mlp::new(&actor_sizes, init_rng)?;
        let last = actor_net.layers().len() - 1;
        actor_net.scale_layer(last, cfg.actor_output_scale);
        let actor = SquashedGaussianPolicy::new(actor_net, cfg.action_limits.clone())?;
        let critic1 = Mlp::new(&critic_sizes, init_rng)?;
        let critic2 = Mlp::new(&critic_sizes, init_rng)?;
        Ok(SacAgent {
            obs_dim,
            actor_opt: Adam::new(actor.net.n_params(), cfg.lr),
            critic1_opt: Adam::new(critic1.n_params(), cfg.lr),
            critic2_opt: Adam::new(critic2.n_params(), cfg.lr),
            alpha_opt: Adam::new(1, cfg.lr),
            target1: critic1.clone(),
            target2: critic2.clone(),
            log_alpha: cfg.init_alpha.ln(),
            actor,
            critic1,
            critic2,
            updates: 0,
            rng,
            cfg,
        })
    }

    /// Convenience constructor seeding both generators from one value.
    pub fn from_seed(obs_dim: usize, cfg: SacConfig, seed: u64) -> Result<Self> {
        let mut init = ChaCha8Rng::seed_from_u64(seed);
        init.set_stream(1);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(2);
        Self::new(obs_dim, cfg, &mut init, rng)
    }

    pub fn config(&self) -> &SacConfig {
        &self.cfg
    }

    pub fn obs_dim(&self) -> usize {
        self.obs_dim
    }

    pub fn action_dim(&self) -> usize {
        self.cfg.action_dim()
    }

    pub fn alpha(&self) -> f64 {
        self.log_alpha.exp()
    }

    pub fn log_alpha(&self) -> f64 {
        self.log_alpha
    }

    pub fn set_log_alpha(&mut self, v: f64) {
        self.log_alpha = v;
    }

    pub fn updates(&self) -> u64 {
        self.updates
    }

    pub fn actor(&self) -> &SquashedGaussianPolicy {
        &self.actor
    }

    pub fn actor_mut(&mut self) -> &mut SquashedGaussianPolicy {
        &mut self.actor
    }

    pub fn critics(&self) -> (&Mlp, &Mlp) {
        (&self.critic1, &self.critic2)
    }

    pub fn critics_mut(&mut self) -> (&mut Mlp, &mut Mlp) {
        (&mut self.critic1, &mut self.critic2)
    }

    pub fn targets(&self) -> (&Mlp, &Mlp) {
        (&self.target1, &self.target2)
    }

    pub fn normalize_obs(&self, obs: &[f64]) -> Vec<f64> {
        obs.iter()
            .enumerate()
            .map(|(i, v)| {
                let o = self.cfg.obs_offset.as_ref().map_or(0.0, |o| o[i]);
                let s = self.cfg.obs_scale.as_ref().map_or(1.0, |s| s[i]);
                (v - o) / s
            })
            .collect()
    }

    /// Samples a residual for a raw observation.
    pub fn act(&mut self, obs: &[f64], deterministic: bool) -> ActionSample {
        let x = self.normalize_obs(obs);
        self.actor.act(&x, &mut self.rng, deterministic)
    }

    /// Minibatch from `indices`, with normalized observations and actions.
    pub fn make_batch(&self, buffer: &ReplayBuffer, indices: &[usize]) -> Batch {
        let n = indices.len();
        let a_dim = self.action_dim();
        let mut obs = DMatrix::zeros(self.obs_dim, n);
        let mut next_obs = DMatrix::zeros(self.obs_dim, n);
        let mut action = DMatrix::zeros(a_dim, n);
        let mut reward = DVector::zeros(n);
        let mut done = DVector::zeros(n);
        for (j, &i) in indices.iter().enumerate() {
            let t = buffer.get(i);
            obs.set_column(j, &DVector::from_vec(self.normalize_obs(&t.obs)));
            next_obs.set_column(j, &DVector::from_vec(self.normalize_obs(&t.next_obs)));
            action.set_column(j, &DVector::from_vec(self.actor.normalize(&t.action)));
            reward[j] = t.reward;
            done[j] = if t.done { 1.0 } else { 0.0 };
        }
        Batch { obs, action, reward, next_obs, done }
    }

    fn draw_noise(&mut self, n: usize) -> DMatrix<f64> {
        let a_dim = self.action_dim();
        let rng = &mut self.rng;
        DMatrix::from_fn(a_dim, n, |_, _| StandardNormal.sample(rng))
    }

    /// Bootstrapped targets `y = r + γ(1 − done)(min Q̄(s′, a′) − α log π(a′|s′))`.
    pub fn targets_for(&self, batch: &Batch, next_noise: &DMatrix<f64>) -> Result<DVector<f64>> {
        let next = self.actor.sample_with_noise(&batch.next_obs, next_noise);
        let input = stack(&batch.next_obs, &next.action);
        let q1 = self.target1.forward(&input);
        let q2 = self.target2.forward(&input);
        let alpha = self.alpha();
        let y = DVector::from_fn(batch.len(), |j, _| {
            let soft = q1[j].min(q2[j]) - alpha * next.log_prob[j];
            batch.reward[j] + self.cfg.gamma * (1.0 - batch.done[j]) * soft
        });
        if y.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("critic target".into()));
        }
        Ok(y)
    }

    /// Sum of the two critics' mean squared errors against the target.
    pub fn critic_loss(&self, batch: &Batch, next_noise: &DMatrix<f64>) -> Result<CriticGrads> {
        let y = self.targets_for(batch, next_noise)?;
        let input = stack(&batch.obs, &batch.action);
        let n = batch.len() as f64;
        let mut loss = 0.0;
        let mut grads = Vec::with_capacity(2);
        for critic in [&self.critic1, &self.critic2] {
            let (q, trace) = critic.forward_trace(&input);
            let err = DMatrix::from_fn(1, batch.len(), |_, j| q[j] - y[j]);
            loss += err.norm_squared() / n;
            grads.push(critic.backward(&trace, &(err * (2.0 / n))).0);
        }
        let critic2 = grads.pop().unwrap();
        let critic1 = grads.pop().unwrap();
        Ok(CriticGrads { loss, critic1, critic2 })
    }

    /// `mean(α log π(ã|s) − min(Q₁, Q₂)(s, ã))` with `ã` reparameterized by
    /// `noise`; α is held fixed.
    pub fn actor_loss(&self, batch: &Batch, noise: &DMatrix<f64>) -> ActorGrads {
        let (loss, grads, s) = self.actor_loss_inner(&batch.obs, noise);
        ActorGrads { loss, actor: grads, mean_log_prob: s.log_prob.mean() }
    }

    fn actor_loss_inner(&self, obs: &DMatrix<f64>, noise: &DMatrix<f64>) -> (f64, Mlp, PolicyBatch) {
        let n = obs.ncols();
        let nf = n as f64;
        let a_dim = self.action_dim();
        let alpha = self.alpha();
        let s = self.actor.sample_with_noise(obs, noise);
        let input = stack(obs, &s.action);
        let (q1, t1) = self.critic1.forward_trace(&input);
        let (q2, t2) = self.critic2.forward_trace(&input);
        let mut loss = 0.0;
        let mut g1 = DMatrix::zeros(1, n);
        let mut g2 = DMatrix::zeros(1, n);
        for j in 0..n {
            let first = q1[j] <= q2[j];
            let qmin = if first { q1[j] } else { q2[j] };
            loss += (alpha * s.log_prob[j] - qmin) / nf;
            if first {
                g1[j] = -1.0 / nf;
            } else {
                g2[j] = -1.0 / nf;
            }
        }
        let gin = self.critic1.backward_input(&t1, &g1) + self.critic2.backward_input(&t2, &g2);
        let obs_dim = obs.nrows();
        let mut grad_latent = DMatrix::zeros(a_dim, n);
        for j in 0..n {
            for i in 0..a_dim {
                let a = s.action[(i, j)];
                // d/du of −log(1 − tanh²u) is 2·tanh u
                grad_latent[(i, j)] = alpha * 2.0 * a / nf + gin[(obs_dim + i, j)] * (1.0 - a * a);
            }
        }
        let direct = DMatrix::from_element(a_dim, n, -alpha / nf);
        let grads = self.actor.backward(&s, &grad_latent, &direct);
        (loss, grads, s)
    }

    /// Temperature loss `−log α · (mean log π + H̄)` and its derivative in
    /// `log α`.
    pub fn alpha_loss(&self, mean_log_prob: f64) -> (f64, f64) {
        let k = mean_log_prob + self.cfg.target_entropy();
        (-self.log_alpha * k, -k)
    }

    /// One gradient step on critics, actor and temperature, then Polyak
    /// averaging of the targets. Returns `None` below the warmup size.
    pub fn update(&mut self, buffer: &ReplayBuffer) -> Result<Option<UpdateStats>> {
        if buffer.len() < self.cfg.warmup {
            return Ok(None);
        }
        let indices = buffer.sample_indices(&mut self.rng, self.cfg.batch_size);
        let batch = self.make_batch(buffer, &indices);
        let next_noise = self.draw_noise(batch.len());
        let noise = self.draw_noise(batch.len());
        self.update_with(&batch, &next_noise, &noise).map(Some)
    }

    /// [`update`](Self::update) with an explicit batch and noise.
    pub fn update_with(&mut self, batch: &Batch, next_noise: &DMatrix<f64>, noise: &DMatrix<f64>) -> Result<UpdateStats> {
        let c = self.critic_loss(batch, next_noise)?;
        self.critic1_opt.step(self.critic1.param_slices_mut(), c.critic1.param_slices());
        self.critic2_opt.step(self.critic2.param_slices_mut(), c.critic2.param_slices());

        let a = self.actor_loss(batch, noise);
        self.actor_opt.step(self.actor.net.param_slices_mut(), a.actor.param_slices());

        let (alpha_loss, alpha_grad) = self.alpha_loss(a.mean_log_prob);
        if self.cfg.learn_alpha {
            self.alpha_opt.step_scalar(&mut self.log_alpha, alpha_grad);
        }

        self.target1.polyak_from(&self.critic1, self.cfg.tau);
        self.target2.polyak_from(&self.critic2, self.cfg.tau);
        self.updates += 1;
        if !(self.actor.net.is_finite() && self.critic1.is_finite() && self.critic2.is_finite() && self.log_alpha.is_finite()) {
            return Err(Error::NonFinite(format!("network parameters after update {}", self.updates)));
        }
        Ok(UpdateStats { critic_loss: c.loss, actor_loss: a.loss, alpha_loss, alpha: self.alpha() })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, serde_json::to_string(self)?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::file(path, e.to_string()))?;
        let agent: SacAgent = serde_json::from_str(&text).map_err(|e| Error::file(path, e.to_string()))?;
        agent.cfg.validate(agent.obs_dim).map_err(|e| Error::file(path, e.to_string()))?;
        Ok(agent)
    }
}

fn stack(top: &DMatrix<f64>, bottom: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = DMatrix::zeros(top.nrows() + bottom.nrows(), top.ncols());
    out.rows_mut(0, top.nrows()).copy_from(top);
    out.rows_mut(top.nrows(), bottom.nrows()).copy_from(bottom);
    out
}

#[cfg(test)]
mod tests {
    use rand::Rng;

    use super::*;
    use crate::sac::replay::Transition;

    fn small_cfg() -> SacConfig {
        SacConfig { hidden: vec![16, 16], action_limits: vec![0.5, 0.2], actor_output_scale: 1.0, ..SacConfig::default() }
    }

    fn random_batch(rng: &mut ChaCha8Rng, obs_dim: usize, a_dim: usize, n: usize) -> Batch {
        Batch {
            obs: DMatrix::from_fn(obs_dim, n, |_, _| rng.random_range(-1.0..1.0)),
            action: DMatrix::from_fn(a_dim, n, |_, _| rng.random_range(-0.9..0.9)),
            reward: DVector::from_fn(n, |_, _| rng.random_range(-1.0..0.0)),
            next_obs: DMatrix::from_fn(obs_dim, n, |_, _| rng.random_range(-1.0..1.0)),
            done: DVector::from_fn(n, |j, _| if j == 0 { 1.0 } else { 0.0 }),
        }
    }

    fn close(fd: f64, an: f64) -> bool {
        (fd - an).abs() <= 1e-6 + 1e-4 * fd.abs().max(an.abs())
    }

    #[test]
    fn terminal_and_undiscounted_targets_equal_reward() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let agent = SacAgent::from_seed(3, small_cfg(), 4).unwrap();
        let mut b = random_batch(&mut rng, 3, 2, 5);
        b.done.fill(1.0);
        let noise = DMatrix::from_fn(2, 5, |_, _| rng.random_range(-1.0..1.0));
        assert_eq!(agent.targets_for(&b, &noise).unwrap(), b.reward);
        b.done.fill(0.0);
        let mut cfg = small_cfg();
        cfg.gamma = 0.0;
        let agent = SacAgent::from_seed(3, cfg, 4).unwrap();
        assert_eq!(agent.targets_for(&b, &noise).unwrap(), b.reward);
    }

    #[test]
    fn non_finite_target_is_an_error() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let agent = SacAgent::from_seed(3, small_cfg(), 4).unwrap();
        let mut b = random_batch(&mut rng, 3, 2, 5);
        b.reward[2] = f64::NAN;
        let noise = DMatrix::zeros(2, 5);
        assert!(matches!(agent.critic_loss(&b, &noise), Err(Error::NonFinite(_))));
    }

    #[test]
    fn critic_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let agent = SacAgent::from_seed(3, small_cfg(), 7).unwrap();
        let b = random_batch(&mut rng, 3, 2, 5);
        let noise = DMatrix::from_fn(2, 5, |_, _| rng.random_range(-1.0..1.0));
        let g = agent.critic_loss(&b, &noise).unwrap();
        let h = 1e-6;
        for which in 0..2 {
            let n = agent.critic1.n_params();
            for k in 0..n {
                let eval = |delta: f64| {
                    let mut a = agent.clone();
                    let c = if which == 0 { &mut a.critic1 } else { &mut a.critic2 };
                    c.set_param(k, c.param(k) + delta);
                    a.critic_loss(&b, &noise).unwrap().loss
                };
                let fd = (eval(h) - eval(-h)) / (2.0 * h);
                let an = if which == 0 { g.critic1.param(k) } else { g.critic2.param(k) };
                assert!(close(fd, an), "critic {which} param {k}: fd {fd} vs {an}");
            }
        }
    }

    #[test]
    fn actor_gradient_matches_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let mut agent = SacAgent::from_seed(3, small_cfg(), 8).unwrap();
        agent.set_log_alpha(0.3f64.ln());
        let b = random_batch(&mut rng, 3, 2, 5);
        let noise = DMatrix::from_fn(2, 5, |_, _| rng.random_range(-1.5..1.5));
        let g = agent.actor_loss(&b, &noise);
        let h = 1e-6;
        for k in 0..agent.actor.net.n_params() {
            let eval = |delta: f64| {
                let mut a = agent.clone();
                let v = a.actor.net.param(k);
                a.actor.net.set_param(k, v + delta);
                a.actor_loss(&b, &noise).loss
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!(close(fd, g.actor.param(k)), "param {k}: fd {fd} vs {}", g.actor.param(k));
        }
    }

    #[test]
    fn alpha_gradient_and_fixed_point() {
        let mut agent = SacAgent::from_seed(3, small_cfg(), 9).unwrap();
        agent.set_log_alpha(-0.7);
        let mean_lp = 1.3;
        let (_, grad) = agent.alpha_loss(mean_lp);
        let h = 1e-6;
        let mut plus = agent.clone();
        plus.set_log_alpha(-0.7 + h);
        let mut minus = agent.clone();
        minus.set_log_alpha(-0.7 - h);
        let fd = (plus.alpha_loss(mean_lp).0 - minus.alpha_loss(mean_lp).0) / (2.0 * h);
        assert!((fd - grad).abs() < 1e-6);
        // target entropy −2 for two action dimensions
        assert_eq!(agent.alpha_loss(2.0).1, 0.0);
        // log π above −H̄ means too little entropy: descent raises α
        assert!(agent.alpha_loss(5.0).1 < 0.0);
    }

    #[test]
    fn zero_alpha_constant_critic_gives_zero_actor_gradient() {
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let mut agent = SacAgent::from_seed(3, small_cfg(), 10).unwrap();
        agent.set_log_alpha(f64::NEG_INFINITY);
        for c in [&mut agent.critic1, &mut agent.critic2] {
            let last = c.layers().len() - 1;
            c.layers_mut()[last].weight.fill(0.0);
            c.layers_mut()[last].bias.fill(1.5);
        }
        let b = random_batch(&mut rng, 3, 2, 4);
        let noise = DMatrix::from_fn(2, 4, |_, _| rng.random_range(-1.0..1.0));
        let g = agent.actor_loss(&b, &noise);
        assert!((0..g.actor.n_params()).all(|k| g.actor.param(k) == 0.0));
    }

    #[test]
    fn warmup_and_polyak_recursion() {
        let mut cfg = small_cfg();
        cfg.batch_size = 8;
        let mut agent = SacAgent::from_seed(3, cfg, 11).unwrap();
        assert_eq!(agent.targets(), agent.critics());
        let mut buffer = ReplayBuffer::new(1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let push = |buffer: &mut ReplayBuffer, rng: &mut ChaCha8Rng| {
            buffer.push(Transition {
                obs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: vec![rng.random_range(-0.4..0.4), rng.random_range(-0.1..0.1)],
                latent: vec![0.0, 0.0],
                reward: rng.random_range(-1.0..0.0),
                next_obs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                done: false,
            })
        };
        for _ in 0..99 {
            push(&mut buffer, &mut rng);
        }
        let before = agent.clone();
        assert!(agent.update(&buffer).unwrap().is_none());
        assert_eq!(agent, before);
        push(&mut buffer, &mut rng);

        let mut expected1 = agent.target1.clone();
        let mut expected2 = agent.target2.clone();
        for _ in 0..20 {
            assert!(agent.update(&buffer).unwrap().is_some());
            expected1.polyak_from(&agent.critic1, 0.005);
            expected2.polyak_from(&agent.critic2, 0.005);
            assert_eq!(agent.target1, expected1);
            assert_eq!(agent.target2, expected2);
        }
        assert_eq!(agent.updates(), 20);
    }

    #[test]
    fn checkpoint_round_trip_resumes_identically() {
        let mut cfg = small_cfg();
        cfg.batch_size = 16;
        let mut agent = SacAgent::from_seed(3, cfg, 12).unwrap();
        let mut buffer = ReplayBuffer::new(1000).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            buffer.push(Transition {
                obs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                action: vec![rng.random_range(-0.4..0.4), rng.random_range(-0.1..0.1)],
                latent: vec![0.0, 0.0],
                reward: rng.random_range(-1.0..0.0),
                next_obs: (0..3).map(|_| rng.random_range(-1.0..1.0)).collect(),
                done: false,
            });
        }
        for _ in 0..10 {
            agent.update(&buffer).unwrap();
        }
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("agent.json");
        agent.save(&path).unwrap();
        let mut restored = SacAgent::load(&path).unwrap();
        assert_eq!(restored, agent);
        for _ in 0..10 {
            agent.update(&buffer).unwrap();
            restored.update(&buffer).unwrap();
        }
        assert_eq!(restored, agent);
        assert_eq!(restored.act(&[0.1, 0.2, 0.3], false), agent.act(&[0.1, 0.2, 0.3], false));
    }
}
