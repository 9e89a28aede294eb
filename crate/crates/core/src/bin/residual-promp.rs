use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use residual_promp::experiment::{self, ExperimentConfig};
use residual_promp::geometry::{Pose, Quaternion, Vec3};
use residual_promp::{Error, Result};

#[derive(Parser)]
#[command(version, about = "Residual adaptation of ProMP trajectories on a simulated block insertion")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON experiment config; unset fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// nominal | always | variance[:<eps>] | distance[:<meters>]
    #[arg(long, global = true)]
    strategy: Option<String>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    episodes: Option<usize>,
    #[arg(long, global = true)]
    trials: Option<usize>,
    /// Directory of demonstration CSVs to use instead of synthesizing them.
    #[arg(long, global = true)]
    demos: Option<PathBuf>,
    /// Fitted model JSON to use instead of fitting.
    #[arg(long, global = true)]
    model: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Synthesize demonstrations into <out>/demos.
    GenDemos,
    /// Fit the ProMP and compare basis counts.
    FitPromp {
        #[arg(long)]
        n_basis: Option<usize>,
    },
    /// Condition on a start pose and write the nominal trajectory.
    Condition {
        /// `x,y,z` or `x,y,z,qw,qx,qy,qz`; defaults to the demonstration start center.
        #[arg(long)]
        start: Option<String>,
    },
    /// Train residual policies, one trial per seed.
    Train,
    /// Evaluate a checkpoint, or the bare nominal controller without one.
    Eval {
        #[arg(long)]
        checkpoint: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config_error() { 2 } else { 3 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    let c = cli.common;
    if let Some(v) = c.seed {
        cfg.seed = v;
    }
    if let Some(v) = c.strategy {
        cfg.strategy = v;
    }
    if let Some(v) = c.out {
        cfg.out = v;
    }
    if let Some(v) = c.episodes {
        cfg.episodes = v;
    }
    if let Some(v) = c.trials {
        cfg.trials = v;
    }
    if c.demos.is_some() {
        cfg.demos_dir = c.demos;
    }
    if c.model.is_some() {
        cfg.model_path = c.model;
    }
    cfg.validate()?;

    match cli.command {
        Command::GenDemos => {
            for p in experiment::cmd_gen_demos(&cfg)? {
                println!("{}", p.display());
            }
        }
        Command::FitPromp { n_basis } => {
            if let Some(n) = n_basis {
                cfg.fit.n_basis = n;
            }
            let report = experiment::cmd_fit(&cfg)?;
            println!("model: {}", report.model_path.display());
            for (n, ll) in &report.grid {
                println!("n_basis {n:>3}  log-likelihood {ll:.3}");
            }
        }
        Command::Condition { start } => {
            let pose = match start {
                Some(s) => parse_pose(&s)?,
                None => Pose::new(Vec3::from(cfg.demo_gen.start_center), cfg.demo_gen.goal.q),
            };
            println!("{}", experiment::cmd_condition(&cfg, &pose)?.display());
        }
        Command::Train => {
            let n = cfg.episodes;
            let tail = n.saturating_sub(50)..n;
            for r in experiment::cmd_train(&cfg)? {
                println!(
                    "seed {}: success rate (last {}) {:.3}, mean return {:.2}",
                    r.seed,
                    tail.len(),
                    r.success_rate(tail.clone()),
                    r.mean_return(tail.clone())
                );
            }
        }
        Command::Eval { checkpoint } => {
            let s = experiment::cmd_eval(&cfg, checkpoint.as_deref(), cfg.episodes)?;
            println!("episodes {}", s.episodes);
            println!("success rate {:.3}", s.success_rate);
            println!("mean return {:.3}", s.mean_return);
            match s.mean_steps_to_success {
                Some(v) => println!("mean steps to success {v:.1}"),
                None => println!("mean steps to success n/a"),
            }
        }
    }
    Ok(())
}

fn parse_pose(s: &str) -> Result<Pose> {
    let v: Vec<f64> = s
        .split(',')
        .map(|x| x.trim().parse::<f64>())
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| Error::config("--start", e.to_string()))?;
    match v.as_slice() {
        [x, y, z] => Ok(Pose::from_position(Vec3::new(*x, *y, *z))),
        [x, y, z, w, i, j, k] => {
            let q = Quaternion::from_array([*w, *i, *j, *k]);
            if (q.norm() - 1.0).abs() > 1e-6 {
                return Err(Error::config("--start", "quaternion must have unit norm"));
            }
            Ok(Pose::new(Vec3::new(*x, *y, *z), q))
        }
        _ => Err(Error::config("--start", "expected 3 or 7 comma-separated numbers")),
    }
}
