//! Reflex, learned gaze and arbitrator trained across the five task modes,
//! then scored greedily on held-out episodes.

use super::config::RunConfig;
use super::metrics::Metrics;
use super::modulator_config;
use super::saccade::saccade_config;
use crate::checkpoint::Checkpoint;
use crate::envs::{Action, SaccadeEnv, SaccadeObservation, TaskMode};
use crate::error::{Error, Result};
use crate::instincts::{Arbitrator, Choice, ContextKey, LearnedGaze, ReflexPolicy};
use crate::modulation::Modulator;
use crate::seed;

pub struct Agent {
    pub reflex: ReflexPolicy,
    pub learned: LearnedGaze,
    pub arbitrator: Arbitrator,
}

impl Agent {
    pub fn new(cfg: &RunConfig) -> Result<Self> {
        let max_step = cfg.real("env", "max_step");
        Ok(Agent {
            reflex: ReflexPolicy::new(1.0, max_step)?,
            learned: LearnedGaze::new(
                cfg.real("env", "explore_sigma"),
                max_step,
                cfg.real("env", "gaze_lr"),
                &mut seed::stream(cfg.seed(), "arbitration/learned"),
            )?,
            arbitrator: Arbitrator::new(cfg.real("env", "epsilon"))?,
        })
    }

    /// Greedy action with no exploration anywhere.
    pub fn act_greedy(&self, obs: &SaccadeObservation) -> Result<(Action, Choice)> {
        let ctx = ContextKey::of(obs);
        let p = self.arbitrator.preference(&ctx);
        if p[1] > p[0] {
            Ok((self.learned.greedy(obs)?, Choice::Learned))
        } else {
            Ok((self.reflex.act(obs), Choice::Reflex))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModeScore {
    pub mode: TaskMode,
    /// Mean reward per tick.
    pub success: f64,
    /// Fraction of ticks with gaze within `r_fov` of the fixation point.
    pub on_fixation: f64,
    /// Fraction of ticks where the greedy action equals the reflex action.
    pub reflex_agreement: f64,
}

pub fn evaluate(agent: &Agent, cfg: &RunConfig, env_seed: u64) -> Result<Vec<ModeScore>> {
    let episodes = cfg.int("env", "eval_episodes");
    let mut scores = Vec::new();
    for mode in TaskMode::ALL {
        let mut env = SaccadeEnv::new(saccade_config(cfg, mode), seed::derive(env_seed, mode.name()))?;
        let r_fov = env.config().r_fov;
        let fix = env.config().fixation_pos;
        let (mut reward, mut on_fix, mut agree, mut n) = (0.0, 0u64, 0u64, 0u64);
        for _ in 0..episodes {
            let mut obs = env.reset();
            loop {
                let (action, _) = agent.act_greedy(&obs)?;
                agree += (action == agent.reflex.act(&obs)) as u64;
                let (next, r, done) = env.step(action)?;
                let g = env.gaze();
                on_fix += (((g[0] - fix[0]).powi(2) + (g[1] - fix[1]).powi(2)).sqrt() <= r_fov) as u64;
                reward += r;
                n += 1;
                obs = next;
                if done {
                    break;
                }
            }
        }
        let n = n.max(1) as f64;
        scores.push(ModeScore {
            mode,
            success: reward / n,
            on_fixation: on_fix as f64 / n,
            reflex_agreement: agree as f64 / n,
        });
    }
    Ok(scores)
}

/// `env.train_modes`: "all" or a comma-separated list of mode names.
pub fn train_modes(cfg: &RunConfig) -> Result<Vec<TaskMode>> {
    let raw = cfg.str("env", "train_modes").trim();
    if raw == "all" {
        return Ok(TaskMode::ALL.to_vec());
    }
    raw.split(',')
        .map(|s| TaskMode::parse(s.trim()).ok_or_else(|| Error::Config(format!("env.train_modes: unknown mode {s:?}"))))
        .collect()
}

pub struct ArbitrationResult {
    pub agent: Agent,
    pub untrained: Vec<ModeScore>,
    pub trained: Vec<ModeScore>,
    pub reflex_unchanged: bool,
}

pub fn train(cfg: &RunConfig, metrics: Option<&mut Metrics>) -> Result<ArbitrationResult> {
    if cfg.int("env", "episode_len") == 0 {
        return Err(Error::Config("arbitration needs a finite episode_len".into()));
    }
    let root = cfg.seed();
    let eval_seed = seed::derive(root, "arbitration/eval");
    let mut agent = Agent::new(cfg)?;
    let reflex_before = agent.reflex.clone();
    let untrained = evaluate(&agent, cfg, eval_seed)?;
    let mut env = SaccadeEnv::new(saccade_config(cfg, TaskMode::Pro), seed::derive(root, "arbitration/train"))?;
    let mut rng = seed::stream(root, "arbitration/choice");
    let mut modulator = Modulator::new(modulator_config(cfg))?;
    let arb_lr = cfg.real("env", "arb_lr");
    let modes = train_modes(cfg)?;
    let mut rows = Vec::new();
    let mut tick = 0u64;
    for ep in 0..cfg.int("env", "train_episodes") {
        let mode = modes[ep as usize % modes.len()];
        env.set_mode(mode);
        let mut obs = env.reset();
        let (mut total, mut n) = (0.0, 0u64);
        loop {
            let ctx = ContextKey::of(&obs);
            let reflex = agent.reflex.act(&obs);
            let learned = agent.learned.propose(&obs, &mut rng)?;
            let (action, chosen) = agent.arbitrator.arbitrate(reflex, learned, &ctx, &mut rng);
            let (next, r, done) = env.step(action)?;
            modulator.step(r, None)?;
            let m = modulator.factor();
            agent.arbitrator.update(ctx, chosen, r, arb_lr * m)?;
            if chosen == Choice::Learned {
                agent.learned.reinforce(&obs, action, r, m)?;
            }
            total += r;
            n += 1;
            tick += 1;
            obs = next;
            if done {
                break;
            }
        }
        rows.push((tick, format!("reward_{}", mode.name()), total / n as f64));
    }
    let trained = evaluate(&agent, cfg, eval_seed)?;
    if let Some(m) = metrics {
        for (t, name, v) in rows {
            m.push(t, "train", name, v);
        }
        for (label, scores) in [("untrained", &untrained), ("trained", &trained)] {
            for s in scores.iter() {
                let scope = format!("eval_{label}_{}", s.mode.name());
                m.push(tick, scope.as_str(), "success", s.success);
                m.push(tick, scope.as_str(), "on_fixation", s.on_fixation);
                m.push(tick, scope.as_str(), "reflex_agreement", s.reflex_agreement);
            }
        }
        for (ctx, p) in agent.arbitrator.table() {
            let scope = format!("pref_{}", ctx.label().replace('/', "_"));
            m.push(tick, scope.as_str(), "reflex", p[0]);
            m.push(tick, scope.as_str(), "learned", p[1]);
        }
    }
    let reflex_unchanged = agent.reflex == reflex_before;
    Ok(ArbitrationResult {
        agent,
        untrained,
        trained,
        reflex_unchanged,
    })
}

pub fn run(cfg: &RunConfig) -> Result<(Metrics, Checkpoint, Vec<u8>)> {
    let mut metrics = Metrics::default();
    let res = train(cfg, Some(&mut metrics))?;
    let mut ckpt = Checkpoint::new();
    ckpt.put_reals("learned", res.agent.learned.map().params());
    ckpt.put_reals("reflex", vec![res.agent.reflex.gain(), res.agent.reflex.max_step()]);
    for (ctx, p) in res.agent.arbitrator.table() {
        ckpt.put_reals(&format!("pref/{}", ctx.label()), p.to_vec());
    }
    let mut prefs = Vec::new();
    res.agent.arbitrator.write_csv(&mut prefs)?;
    Ok((metrics, ckpt, prefs))
}
