use residual_promp::env::{EpisodeLog, StartSampler};
use residual_promp::experiment::{ExperimentConfig, Pipeline};
use residual_promp::promp::{std_schedule, ProMPFile};
use residual_promp::residual::{beta_schedule, rollout, AdaptationStrategy, SacLearner, ZeroAgent};
use residual_promp::sac::{ReplayBuffer, SacAgent};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn pipeline() -> Pipeline {
    Pipeline::build(&ExperimentConfig::default()).unwrap()
}

fn run_zero(p: &Pipeline, strategy: &AdaptationStrategy, seed: u64) -> EpisodeLog {
    let mut env = p.env().unwrap();
    let start = env.reset(&p.start_sampler(), seed);
    let nominal = p.nominal(&start.pose).unwrap();
    rollout(&mut env, &nominal, &mut ZeroAgent { action_dim: 6 }, strategy).unwrap()
}

fn same_motion(a: &EpisodeLog, b: &EpisodeLog, steps: usize) -> bool {
    a.rows.len() >= steps
        && b.rows.len() >= steps
        && a.rows[..steps].iter().zip(&b.rows[..steps]).all(|(x, y)| x.pose == y.pose && x.reward == y.reward)
}

#[test]
fn zero_residual_reproduces_nominal_bitwise() {
    let p = pipeline();
    for seed in [3, 8] {
        let nominal = run_zero(&p, &AdaptationStrategy::NominalOnly, seed);
        assert!(nominal.rows.iter().all(|r| r.beta == 0));
        for strategy in [AdaptationStrategy::AlwaysOn, p.strategy] {
            let log = run_zero(&p, &strategy, seed);
            assert_eq!(log.rows.len(), nominal.rows.len());
            assert!(same_motion(&log, &nominal, nominal.rows.len()), "{strategy} diverged");
        }
        // a zero residual under the distance gate holds the last setpoint, so
        // motion only matches until the gate first switches
        let log = run_zero(&p, &AdaptationStrategy::DistanceBased { threshold: 0.04 }, seed);
        let switch = log.rows.iter().position(|r| r.beta == 1).unwrap();
        assert!(switch > 0);
        assert!(same_motion(&log, &nominal, switch));
        assert_eq!(log.rows[switch].pose, nominal.rows[switch].pose);
    }
}

#[test]
fn variance_gate_below_every_sigma_is_nominal() {
    let p = pipeline();
    let tiny = AdaptationStrategy::VarianceBased { eps: 1e-9 };
    let a = run_zero(&p, &AdaptationStrategy::NominalOnly, 4);
    let b = run_zero(&p, &tiny, 4);
    assert_eq!(a, b);
}

#[test]
fn replay_growth_matches_gated_steps() {
    let p = pipeline();
    for strategy in [AdaptationStrategy::AlwaysOn, AdaptationStrategy::NominalOnly, p.strategy] {
        let agent = SacAgent::from_seed(7, p.cfg.sac.clone(), 1).unwrap();
        let mut learner = SacLearner::new(agent, ReplayBuffer::new(10_000).unwrap());
        let mut env = p.env().unwrap();
        let mut total = 0;
        for seed in 0..3 {
            let start = env.reset(&p.start_sampler(), seed);
            let nominal = p.nominal(&start.pose).unwrap();
            let log = rollout(&mut env, &nominal, &mut learner, &strategy).unwrap();
            total += log.rows.iter().filter(|r| r.beta == 1).count();
            if strategy == AdaptationStrategy::AlwaysOn {
                assert_eq!(log.rows.len(), log.steps());
            }
        }
        assert_eq!(learner.buffer.len(), total, "{strategy}");
        match strategy {
            AdaptationStrategy::AlwaysOn => assert_eq!(total, 300),
            AdaptationStrategy::NominalOnly => assert_eq!(total, 0),
            _ => assert!(total > 0 && total < 300),
        }
    }
}

#[test]
fn logged_betas_match_schedule_from_serialized_model() {
    let p = pipeline();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("promp.json");
    p.model_file().save(&path).unwrap();
    let reloaded = ProMPFile::load(&path).unwrap().to_model().unwrap();
    let schedule = beta_schedule(&p.strategy, &std_schedule(&reloaded, 100).unwrap()).unwrap();
    assert!(schedule.windows(2).all(|w| w[0] <= w[1]), "gate must stay open once open");

    let agent = SacAgent::from_seed(7, p.cfg.sac.clone(), 2).unwrap();
    let mut learner = SacLearner::new(agent, ReplayBuffer::new(10_000).unwrap());
    let mut env = p.env().unwrap();
    for seed in 0..5 {
        let start = env.reset(&p.start_sampler(), seed);
        let nominal = p.nominal(&start.pose).unwrap();
        let log = rollout(&mut env, &nominal, &mut learner, &p.strategy).unwrap();
        assert_eq!(log.betas(), schedule[..log.rows.len()].to_vec());
    }
}

#[test]
fn sampled_starts_lie_in_two_sigma_region() {
    let p = pipeline();
    let sampler = p.start_sampler();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let s = sampler.sample(&mut rng);
        let y = nalgebra::DVector::from_column_slice(s.p.as_slice());
        assert!(p.model.in_confidence_region(0.0, &y, 2.0));
    }
}
