use mhpm::envs::{Action, SaccadeConfig, SaccadeEnv, TaskMode};
use mhpm::harness::{skinner, RunConfig};
use proptest::prelude::*;

fn mode_strategy() -> impl Strategy<Value = TaskMode> {
    prop::sample::select(TaskMode::ALL.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn gaze_stays_in_unit_square_and_target_moves_at_most_speed(
        seed in 0u64..1000,
        mode in mode_strategy(),
        moves in prop::collection::vec((-0.1f64..=0.1, -0.1f64..=0.1), 1..120),
    ) {
        let cfg = SaccadeConfig { mode, episode_len: None, ..SaccadeConfig::default() };
        let speed = cfg.speed;
        let mut env = SaccadeEnv::new(cfg, seed).unwrap();
        env.reset();
        for (dx, dy) in moves {
            let before = env.target();
            env.step(Action::Gaze([dx, dy])).unwrap();
            let g = env.gaze();
            prop_assert!((0.0..=1.0).contains(&g[0]) && (0.0..=1.0).contains(&g[1]));
            let t = env.target();
            let moved = ((t[0] - before[0]).powi(2) + (t[1] - before[1]).powi(2)).sqrt();
            prop_assert!(moved <= speed + 1e-12, "target moved {moved}");
        }
    }
}

fn arm_p_after_five(seed: u64, replay: bool) -> f64 {
    let mut cfg = RunConfig::default();
    cfg.set("general", "seed", &seed.to_string()).unwrap();
    cfg.set("env", "M", "5").unwrap();
    let arm = skinner::run_arm(&cfg, replay, None).unwrap();
    assert_eq!(arm.p_correct.len(), 5);
    arm.p_correct[4]
}

#[test]
fn replay_raises_correct_rate_after_five_trials() {
    for seed in 1..=5 {
        let on = arm_p_after_five(seed, true);
        let off = arm_p_after_five(seed, false);
        assert!(on > off, "seed {seed}: replay {on} vs none {off}");
    }
}

#[test]
fn skinner_arms_are_paired_and_deterministic() {
    let mut cfg = RunConfig::default();
    cfg.set("general", "seed", "3").unwrap();
    let a = skinner::run(&cfg).unwrap();
    let b = skinner::run(&cfg).unwrap();
    assert_eq!(a.0.to_csv().unwrap(), b.0.to_csv().unwrap());
    assert_eq!(a.2, b.2);
}
