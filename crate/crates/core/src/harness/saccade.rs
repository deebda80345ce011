//! Visual/motor merge under motor babbling (feedback ablation), then
//! reward-modulated fly tracking.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::RunConfig;
use super::metrics::Metrics;
use super::modulator_config;
use crate::checkpoint::Checkpoint;
use crate::envs::{Action, SaccadeConfig, SaccadeEnv, SaccadeObservation, TaskMode};
use crate::error::{Error, Result};
use crate::heterarchy::{HeterarchyGraph, Inputs, MergeConfig, NodeConfig, NodeId};
use crate::modulation::Modulator;
use crate::seed;
use crate::unit::{default_hidden, AeInit, SignalVector, TrainableMap, UnitTag};

/// Gain of the near-identity AEs: large enough that summaries keep the
/// scale of their inputs.
const IDENTITY_GAIN: f64 = 1.0;

pub fn saccade_config(cfg: &RunConfig, mode: TaskMode) -> SaccadeConfig {
    SaccadeConfig {
        mode,
        speed: cfg.real("env", "speed"),
        r_fov: cfg.real("env", "r_fov"),
        noise_sigma: cfg.real("env", "noise_sigma"),
        max_step: cfg.real("env", "max_step"),
        episode_len: match cfg.int("env", "episode_len") {
            0 => None,
            n => Some(n),
        },
        fixation_off: cfg.int("env", "fixation_off"),
        gap_len: cfg.int("env", "gap_len"),
        ..SaccadeConfig::default()
    }
}

pub struct MergeGraph {
    pub graph: HeterarchyGraph,
    pub visual: NodeId,
    pub motor: NodeId,
    pub merge: NodeId,
}

/// Visual and motor leaves (k = 1) joined by a merge node whose prediction
/// feeds back to both leaves. Every AE starts near the identity, so the
/// merged vector initially is the raw (visual, motor) pair.
pub fn build_merge_graph(seed: u64, base_lr: f64) -> Result<MergeGraph> {
    let node = |input_dim: usize| NodeConfig {
        ae_init: AeInit::NearIdentity { scale: IDENTITY_GAIN },
        ..NodeConfig::new(1, input_dim, input_dim, base_lr)
    };
    let mut graph = HeterarchyGraph::new(seed);
    let visual = graph.add_leaf("visual", node(2))?;
    let motor = graph.add_leaf("motor", node(2))?;
    let merge = graph.connect_merge(&[visual, motor], MergeConfig { node: node(4) })?;
    Ok(MergeGraph {
        graph,
        visual,
        motor,
        merge,
    })
}

fn offset_vector(obs: &SaccadeObservation) -> SignalVector {
    SignalVector::new(obs.retinal_offset.to_vec()).expect("finite offset")
}

/// Random motor command with a weak pull toward the screen centre so the
/// gaze rarely sits on the border.
fn babble<R: Rng + ?Sized>(rng: &mut R, gaze: [f64; 2], max_step: f64) -> Action {
    let half = 0.5 * max_step;
    let d = [
        rng.gen_range(-half..=half) + 0.1 * (0.5 - gaze[0]),
        rng.gen_range(-half..=half) + 0.1 * (0.5 - gaze[1]),
    ];
    Action::gaze_clamped(d, max_step)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BabbleResult {
    /// Mean visual-leaf AR loss over the last quarter of the phase.
    pub visual_loss: f64,
    pub checkpoint: Checkpoint,
}

/// Motor babbling with the merge graph. The same seed drives the world and
/// the babble in both arms, so only the feedback connection differs.
pub fn babble_phase(cfg: &RunConfig, feedback: bool, metrics: Option<&mut Metrics>) -> Result<BabbleResult> {
    let ticks = cfg.int("env", "babble_ticks");
    if ticks == 0 {
        return Err(Error::Config("babble_ticks must be positive".into()));
    }
    let root = cfg.seed();
    let mut env = SaccadeEnv::new(
        SaccadeConfig {
            episode_len: None,
            ..saccade_config(cfg, TaskMode::Pro)
        },
        seed::derive(root, "babble/env"),
    )?;
    let max_step = env.config().max_step;
    let mut rng = seed::stream(root, "babble/motor");
    let mut mg = build_merge_graph(seed::derive(root, "babble/graph"), cfg.real("graph", "base_lr"))?;
    mg.graph.set_feedback_enabled(mg.visual, feedback)?;
    let mut obs = env.reset();
    let tail_start = ticks - ticks / 4;
    let (mut tail_sum, mut tail_n) = (0.0, 0u64);
    let arm = if feedback { "feedback_on" } else { "feedback_off" };
    let mut rows = Vec::new();
    let (mut win_sum, mut win_n) = (0.0, 0u64);
    for t in 0..ticks {
        // the motor leaf sees the command about to be issued, in max_step units
        let action = babble(&mut rng, env.gaze(), max_step);
        let mut inputs = Inputs::new();
        inputs.insert("visual".into(), offset_vector(&obs));
        let d = action.dgaze().expect("gaze");
        inputs.insert("motor".into(), SignalVector::new(vec![d[0] / max_step, d[1] / max_step])?);
        let report = mg.graph.step(&inputs, 1.0)?;
        let loss = report.records[mg.visual.0].ar_loss.expect("leaf fires every tick");
        if t >= tail_start {
            tail_sum += loss;
            tail_n += 1;
        }
        win_sum += loss;
        win_n += 1;
        if (t + 1) % 100 == 0 {
            rows.push((t + 1, win_sum / win_n as f64));
            win_sum = 0.0;
            win_n = 0;
        }
        obs = env.step(action)?.0;
    }
    if let Some(m) = metrics {
        for (t, v) in rows {
            m.push(t, format!("babble_{arm}"), "visual_ar_loss", v);
        }
    }
    let mut checkpoint = Checkpoint::new();
    mg.graph.save_state(&mut checkpoint, "merge_graph");
    Ok(BabbleResult {
        visual_loss: tail_sum / tail_n as f64,
        checkpoint,
    })
}

/// Gaze policy for fly tracking: maps a desired retinal displacement to a
/// move. Trained in hindsight: the executed move is the right answer for the
/// displacement it actually produced.
#[derive(Debug, Clone)]
pub struct TrackLearner {
    map: TrainableMap,
    noise: Normal<f64>,
    max_step: f64,
    base_lr: f64,
}

impl TrackLearner {
    pub fn new<R: Rng + ?Sized>(noise_sigma: f64, max_step: f64, base_lr: f64, rng: &mut R) -> Result<Self> {
        Ok(TrackLearner {
            map: TrainableMap::random(2, default_hidden(2, 2), 2, UnitTag::fresh(), rng),
            noise: Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?,
            max_step,
            base_lr,
        })
    }

    pub fn map(&self) -> &TrainableMap {
        &self.map
    }

    pub fn act<R: Rng + ?Sized>(&self, offset: [f64; 2], rng: &mut R) -> Result<Action> {
        let y = self.map.forward(&SignalVector::new(offset.to_vec())?)?;
        let y = y.as_slice();
        Ok(Action::gaze_clamped(
            [y[0] + self.noise.sample(rng), y[1] + self.noise.sample(rng)],
            self.max_step,
        ))
    }

    /// One step toward `executed` for the observed displacement `before − after`,
    /// at rate `base_lr·m`.
    pub fn learn(&mut self, before: [f64; 2], after: [f64; 2], executed: Action, m: f64) -> Result<f64> {
        let d = executed.dgaze().ok_or_else(|| Error::contract("tracking learner needs gaze actions"))?;
        let x = SignalVector::new(vec![before[0] - after[0], before[1] - after[1]])?;
        self.map.update(&x, &SignalVector::new(d.to_vec())?, self.base_lr * m)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrackResult {
    /// Per-tick `‖target − gaze‖²`.
    pub err_sq: Vec<f64>,
    pub policy_params: Vec<f64>,
}

impl TrackResult {
    /// (first 10% mean, last 10% mean)
    pub fn first_last(&self) -> (f64, f64) {
        super::charlm::first_last_tenth(&self.err_sq)
    }
}

/// Fly tracking in the pro-saccade world with a reward-modulated learning rate.
pub fn track_phase(cfg: &RunConfig, tick_offset: u64, metrics: Option<&mut Metrics>) -> Result<TrackResult> {
    let ticks = cfg.int("env", "track_ticks");
    if ticks == 0 {
        return Err(Error::Config("track_ticks must be positive".into()));
    }
    let root = cfg.seed();
    let mut env = SaccadeEnv::new(
        SaccadeConfig {
            episode_len: None,
            ..saccade_config(cfg, TaskMode::Pro)
        },
        seed::derive(root, "track/env"),
    )?;
    let mut rng = seed::stream(root, "track/policy");
    let mut policy = TrackLearner::new(
        cfg.real("env", "explore_sigma"),
        env.config().max_step,
        cfg.real("env", "policy_lr"),
        &mut seed::stream(root, "track/init"),
    )?;
    let mut modulator = Modulator::new(modulator_config(cfg))?;
    let mut obs = env.reset();
    let mut err_sq = Vec::with_capacity(ticks as usize);
    let mut rows = Vec::new();
    for t in 0..ticks {
        let action = policy.act(obs.retinal_offset, &mut rng)?;
        let (next, reward, _) = env.step(action)?;
        modulator.step(reward, None)?;
        policy.learn(obs.retinal_offset, next.retinal_offset, action, modulator.factor())?;
        let e = env.tracking_error_sq();
        err_sq.push(e);
        rows.push((tick_offset + t + 1, e, reward));
        obs = next;
    }
    if let Some(m) = metrics {
        for (t, e, r) in rows {
            m.push(t, "track", "err_sq", e);
            m.push(t, "track", "reward", r);
        }
    }
    Ok(TrackResult {
        err_sq,
        policy_params: policy.map().params(),
    })
}

/// Both babbling arms, then tracking. Returns metrics and a checkpoint.
pub fn run(cfg: &RunConfig) -> Result<(Metrics, Checkpoint)> {
    let mut metrics = Metrics::default();
    let mut on_rows = Metrics::default();
    let mut off_rows = Metrics::default();
    let on = babble_phase(cfg, true, Some(&mut on_rows))?;
    let off = babble_phase(cfg, false, Some(&mut off_rows))?;
    let babble_ticks = cfg.int("env", "babble_ticks");
    let mut merged: Vec<_> = on_rows.rows.into_iter().chain(off_rows.rows).collect();
    merged.sort_by_key(|r| r.tick);
    metrics.rows = merged;
    metrics.push(babble_ticks, "babble", "visual_loss_feedback_on", on.visual_loss);
    metrics.push(babble_ticks, "babble", "visual_loss_feedback_off", off.visual_loss);
    let track = track_phase(cfg, babble_ticks, Some(&mut metrics))?;
    let (first, last) = track.first_last();
    let end = babble_ticks + track.err_sq.len() as u64;
    metrics.push(end, "track", "err_sq_first10", first);
    metrics.push(end, "track", "err_sq_last10", last);
    let mut ckpt = on.checkpoint;
    ckpt.put_reals("track/policy", track.policy_params);
    Ok((metrics, ckpt))
}
