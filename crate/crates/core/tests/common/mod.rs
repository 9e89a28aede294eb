#![allow(dead_code)]

use residual_promp::sac::{ReplayBuffer, SacAgent, SacConfig, Transition};

pub const BANDIT_OPTIMUM: f64 = 0.3;

pub fn bandit_reward(a: f64) -> f64 {
    -(a - BANDIT_OPTIMUM).powi(2)
}

/// One-state, one-dimensional bandit with reward `-(a - 0.3)²` on actions in
/// `(-1, 1)`. Every step is terminal, so the critic target is the reward.
pub fn train_bandit(alpha: Option<f64>, updates: usize, seed: u64) -> SacAgent {
    let cfg = SacConfig {
        action_limits: vec![1.0],
        init_alpha: alpha.unwrap_or(0.1),
        learn_alpha: alpha.is_none(),
        target_entropy: Some(-1.0),
        ..SacConfig::default()
    };
    let mut agent = SacAgent::from_seed(1, cfg, seed).unwrap();
    let mut buffer = ReplayBuffer::new(100_000).unwrap();
    let obs = vec![0.0];
    while (agent.updates() as usize) < updates {
        let s = agent.act(&obs, false);
        buffer.push(Transition {
            obs: obs.clone(),
            reward: bandit_reward(s.action[0]),
            action: s.action,
            latent: s.latent,
            next_obs: obs.clone(),
            done: true,
        });
        agent.update(&buffer).unwrap();
    }
    agent
}

/// Deterministic action and a sampled entropy estimate `-E[log π]`.
pub fn bandit_policy(agent: &mut SacAgent, samples: usize) -> (f64, f64) {
    let mode = agent.act(&[0.0], true).action[0];
    let entropy = -(0..samples).map(|_| agent.act(&[0.0], false).log_prob).sum::<f64>() / samples as f64;
    (mode, entropy)
}
