//! Soft actor-critic on a one-step bandit with reward -(a - 0.3)².
//!
//! `cargo run --release --example sac_bandit`

use residual_promp::sac::{ReplayBuffer, SacAgent, SacConfig, Transition};

fn main() -> residual_promp::Result<()> {
    let cfg = SacConfig { action_limits: vec![1.0], target_entropy: Some(-1.0), ..SacConfig::default() };
    let mut agent = SacAgent::from_seed(1, cfg, 0)?;
    let mut buffer = ReplayBuffer::new(10_000)?;
    let obs = vec![0.0];
    for step in 1..=4000 {
        let s = agent.act(&obs, false);
        let reward = -(s.action[0] - 0.3).powi(2);
        buffer.push(Transition { obs: obs.clone(), action: s.action, latent: s.latent, reward, next_obs: obs.clone(), done: true });
        let stats = agent.update(&buffer)?;
        if step % 500 == 0 {
            let mode = agent.act(&obs, true).action[0];
            let loss = stats.map_or(String::from("warming up"), |u| format!("critic {:.2e}  actor {:+.3}", u.critic_loss, u.actor_loss));
            println!("step {step:>4}: mode {mode:+.4}  alpha {:.4}  {loss}", agent.alpha());
        }
    }
    Ok(())
}
