//! Roll the bare nominal trajectory through the insertion environment and
//! show where it stalls against the disturbance.
//!
//! `cargo run --release --example insertion_env`

use residual_promp::experiment::{ExperimentConfig, Pipeline};
use residual_promp::residual::{rollout, AdaptationStrategy, ZeroAgent};

fn main() -> residual_promp::Result<()> {
    let p = Pipeline::build(&ExperimentConfig::default())?;
    let mut env = p.env()?;
    let scene = env.scene().clone();
    println!(
        "channel {:.1} x {:.1} mm, depth {:.1} mm, block {:?} mm",
        2e3 * scene.channel_halfwidths[0],
        2e3 * scene.channel_halfwidths[1],
        1e3 * scene.depth,
        (scene.block_half_extents() * 2e3).as_slice()
    );

    for seed in 0..3 {
        let start = env.reset(&p.start_sampler(), seed);
        let nominal = p.nominal(&start.pose)?;
        let log = rollout(&mut env, &nominal, &mut ZeroAgent { action_dim: 6 }, &AdaptationStrategy::NominalOnly)?;
        let last = &log.rows.last().expect("nonempty episode").pose;
        let gap = (last.p - env.goal().p) * 1e3;
        println!(
            "seed {seed}: {} steps, return {:8.2}, success {}, final offset [{:6.2} {:6.2} {:6.2}] mm",
            log.steps(),
            log.total_reward(),
            log.success(),
            gap[0],
            gap[1],
            gap[2]
        );
    }
    Ok(())
}
