//! Gate schedules of the four adaptation strategies and a short residual
//! training run under the variance gate.
//!
//! `cargo run --release --example residual_rollout`

use residual_promp::env::EPISODE_STEPS;
use residual_promp::experiment::{ExperimentConfig, Pipeline};
use residual_promp::promp::std_schedule;
use residual_promp::residual::{beta_schedule, rollout, AdaptationStrategy, SacLearner};
use residual_promp::sac::ReplayBuffer;

fn main() -> residual_promp::Result<()> {
    let p = Pipeline::build(&ExperimentConfig::default())?;
    let sigma = std_schedule(&p.model, EPISODE_STEPS)?;
    println!("variance gate: {}", p.strategy);
    for strategy in [AdaptationStrategy::NominalOnly, AdaptationStrategy::AlwaysOn, p.strategy] {
        let beta = beta_schedule(&strategy, &sigma).expect("known ahead of time");
        let line: String = beta.iter().map(|b| if *b == 1 { '#' } else { '.' }).collect();
        let name = strategy.to_string();
        println!("{:<16} {line}", name.split(':').next().unwrap_or(&name));
    }
    println!("{:<16} depends on the observed distance to the goal", "distance");

    let mut learner = SacLearner::new(p.new_agent(0)?, ReplayBuffer::new(100_000)?);
    let mut env = p.env()?;
    for episode in 0..40 {
        let start = env.reset(&p.start_sampler(), episode);
        let nominal = p.nominal(&start.pose)?;
        let log = rollout(&mut env, &nominal, &mut learner, &p.strategy)?;
        if episode % 5 == 4 {
            println!(
                "episode {episode:>2}: return {:8.2}  steps {:>3}  success {}  buffer {}",
                log.total_reward(),
                log.steps(),
                log.success(),
                learner.buffer.len()
            );
        }
    }
    Ok(())
}
