//! Few-shot button learning with and without replay between trials.

use rand::Rng;

use super::config::RunConfig;
use super::metrics::Metrics;
use super::modulator_config;
use crate::checkpoint::Checkpoint;
use crate::envs::{Action, Button, SkinnerBoxEnv};
use crate::error::{Error, Result};
use crate::hippocampus::{replay, BufferConfig, EpisodeBuffer, ReplayLearner, Step};
use crate::modulation::Modulator;
use crate::seed;
use crate::unit::{default_hidden, SignalVector, TrainableMap, UnitTag};

/// Softmax button policy over a two-output map.
#[derive(Debug, Clone)]
pub struct PressLearner {
    map: TrainableMap,
    pub beta: f64,
    pub base_lr: f64,
}

impl PressLearner {
    pub fn new<R: Rng + ?Sized>(beta: f64, base_lr: f64, rng: &mut R) -> Self {
        let d = SkinnerBoxEnv::FEATURES;
        PressLearner {
            map: TrainableMap::random(d, default_hidden(d, 2), 2, UnitTag::fresh(), rng),
            beta,
            base_lr,
        }
    }

    pub fn map(&self) -> &TrainableMap {
        &self.map
    }

    /// Press probabilities `[blue, red]`.
    pub fn probabilities(&self, obs: &SignalVector) -> Result<[f64; 2]> {
        let y = self.map.forward(obs)?;
        let y = y.as_slice();
        let p_blue = 1.0 / (1.0 + (-self.beta * (y[0] - y[1])).exp());
        Ok([p_blue, 1.0 - p_blue])
    }

    pub fn sample<R: Rng + ?Sized>(&self, obs: &SignalVector, rng: &mut R) -> Result<Button> {
        let p = self.probabilities(obs)?;
        Ok(if rng.gen::<f64>() < p[0] { Button::Blue } else { Button::Red })
    }
}

impl ReplayLearner for PressLearner {
    /// Moves the pressed button's output toward 1 and the other toward 0.
    /// Non-press steps carry no choice and are skipped.
    fn train_step(&mut self, step: &Step, eta_scale: f64) -> Result<()> {
        let Action::Press(b) = step.action else {
            return Ok(());
        };
        let target = SignalVector::one_hot(2, b.index());
        self.map.update(&step.observation, &target, self.base_lr * eta_scale)?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArmResult {
    /// P(correct) after each trial.
    pub p_correct: Vec<f64>,
    /// Rewarded trials experienced when P(correct) first reached 0.9.
    pub rewarded_to_criterion: Option<u32>,
    pub params: Vec<f64>,
    /// Stored episodes as CSV.
    pub episodes_csv: Vec<u8>,
}

impl ArmResult {
    /// Unreached criterion counts as one more than the trial budget.
    pub fn trials_or(&self, budget: u32) -> u32 {
        self.rewarded_to_criterion.unwrap_or(budget + 1)
    }
}

pub const CRITERION: f64 = 0.9;

/// One arm. Each trial is a press followed by `W − 1` waits; replay runs
/// after the inter-trial interval.
pub fn run_arm(cfg: &RunConfig, with_replay: bool, metrics: Option<(&mut Metrics, &str)>) -> Result<ArmResult> {
    let root = cfg.seed();
    let trials = cfg.int("env", "M") as u32;
    let w = cfg.usize("env", "W");
    if trials == 0 {
        return Err(Error::Config("M must be positive".into()));
    }
    let mut env = SkinnerBoxEnv::new(seed::derive(root, "skinner/env"), trials);
    let mut learner = PressLearner::new(
        cfg.real("env", "beta"),
        cfg.real("env", "press_lr"),
        &mut seed::stream(root, "skinner/learner"),
    );
    let mut buffer = EpisodeBuffer::new(BufferConfig {
        capacity: cfg.usize("env", "capacity"),
        window: w,
        salience_threshold: cfg.real("env", "salience"),
    })?;
    let mut modulator = Modulator::new(modulator_config(cfg))?;
    let mut choice_rng = seed::stream(root, "skinner/choice");
    let mut replay_rng = seed::stream(root, "skinner/replay");
    let passes = cfg.usize("env", "replay_passes");
    let boost = cfg.real("env", "replay_boost");
    let obs = env.observe().features;
    let good = env.good_button().index();
    let mut tick = 0u64;
    let mut rewarded = 0u32;
    let mut out = ArmResult {
        p_correct: Vec::new(),
        rewarded_to_criterion: None,
        params: Vec::new(),
        episodes_csv: Vec::new(),
    };
    let mut rows = Vec::new();
    while !env.done() {
        let button = learner.sample(&obs, &mut choice_rng)?;
        let action = Action::Press(button);
        let (_, r, mut done) = env.step(action)?;
        modulator.step(r, None)?;
        let step = Step {
            observation: obs.clone(),
            action,
            reward: r,
            tick,
        };
        learner.train_step(&step, modulator.factor())?;
        buffer.observe(step)?;
        tick += 1;
        rewarded += (r > 0.0) as u32;
        for _ in 1..w {
            if done {
                break;
            }
            let (_, r0, d) = env.step(Action::Wait)?;
            done = d;
            modulator.step(r0, None)?;
            buffer.observe(Step {
                observation: obs.clone(),
                action: Action::Wait,
                reward: r0,
                tick,
            })?;
            tick += 1;
        }
        if with_replay {
            replay(&buffer, &mut learner, passes, boost, &modulator.config, &mut replay_rng)?;
        }
        let p = learner.probabilities(&obs)?[good];
        out.p_correct.push(p);
        rows.push((tick, p, r));
        if out.rewarded_to_criterion.is_none() && p >= CRITERION {
            out.rewarded_to_criterion = Some(rewarded);
        }
    }
    if let Some((m, arm)) = metrics {
        for (t, p, r) in rows {
            m.push(t, arm, "p_correct", p);
            m.push(t, arm, "reward", r);
        }
        m.push(tick, arm, "rewarded_to_criterion", out.trials_or(trials) as f64);
    }
    buffer.write_csv(&mut out.episodes_csv)?;
    out.params = learner.map().params();
    Ok(out)
}

/// Runs the configured arm (replay on or off) and the opposite arm with
/// identical seeds for comparison.
pub fn run(cfg: &RunConfig) -> Result<(Metrics, Checkpoint, Vec<u8>)> {
    let primary = cfg.bool("env", "replay");
    let mut on_rows = Metrics::default();
    let mut off_rows = Metrics::default();
    let on = run_arm(cfg, true, Some((&mut on_rows, "replay_on")))?;
    let off = run_arm(cfg, false, Some((&mut off_rows, "replay_off")))?;
    let mut rows: Vec<_> = on_rows.rows.into_iter().chain(off_rows.rows).collect();
    rows.sort_by_key(|r| r.tick);
    let mut ckpt = Checkpoint::new();
    let chosen = if primary { &on } else { &off };
    ckpt.put_reals("learner", chosen.params.clone());
    ckpt.put_ints("replay", vec![primary as u64]);
    Ok((Metrics { rows }, ckpt, chosen.episodes_csv.clone()))
}
