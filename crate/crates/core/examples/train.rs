//! Multi-seed training of one strategy with the CSV/JSON outputs the plotting
//! scripts read, followed by an evaluation of the first checkpoint.
//!
//! `cargo run --release --example train -- [strategy] [episodes] [trials]`

use std::path::PathBuf;

use residual_promp::experiment::{cmd_eval, cmd_train, ExperimentConfig};

fn main() -> residual_promp::Result<()> {
    let mut args = std::env::args().skip(1);
    let strategy = args.next().unwrap_or_else(|| "variance".into());
    let episodes = args.next().map_or(Ok(100), |s| s.parse()).map_err(|e| residual_promp::Error::config("episodes", format!("{e}")))?;
    let trials = args.next().map_or(Ok(2), |s| s.parse()).map_err(|e| residual_promp::Error::config("trials", format!("{e}")))?;
    let out = PathBuf::from("runs").join(&strategy);
    let cfg = ExperimentConfig { strategy, episodes, trials, out: out.clone(), ..ExperimentConfig::default() };
    cfg.validate()?;

    let tail = episodes.saturating_sub(20)..episodes;
    for r in cmd_train(&cfg)? {
        println!("seed {}: success over the last {} episodes {:.2}, mean return {:.2}", r.seed, tail.len(), r.success_rate(tail.clone()), r.mean_return(tail.clone()));
    }
    let ckpt = std::fs::read_dir(&out)?
        .filter_map(|e| e.ok())
        .map(|e| e.path().join("checkpoint.json"))
        .find(|p| p.exists())
        .expect("training wrote a checkpoint");
    let summary = cmd_eval(&ExperimentConfig { out: out.join("eval_first"), ..cfg }, Some(&ckpt), 20)?;
    println!("evaluation of {}: {summary:?}", ckpt.display());
    println!("outputs under {}", out.display());
    Ok(())
}
