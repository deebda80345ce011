//! Browser bindings for the demo page in `www/`.
//!
//! Each export returns a flat `Float64Array`; the page knows the stride.

use mhpm::envs::{SaccadeEnv, TaskMode};
use mhpm::harness::arbitration::{self, Agent};
use mhpm::harness::saccade::saccade_config;
use mhpm::harness::{skinner, RunConfig};
use mhpm::instincts::Choice;
use mhpm::modulation::{modulation_factor, ModulatorConfig, RewardTrace};
use wasm_bindgen::prelude::*;

fn js(e: mhpm::Error) -> JsError {
    JsError::new(&e.to_string())
}

fn seeded(seed: u32) -> mhpm::Result<RunConfig> {
    let mut cfg = RunConfig::default();
    cfg.set("general", "seed", &seed.to_string())?;
    Ok(cfg)
}

/// Multiplier after each reward in `rewards`, pairs of `(trace, factor)`.
pub fn modulation_trace(rewards: &[f64], alpha: f64, tau: f64) -> mhpm::Result<Vec<f64>> {
    let cfg = ModulatorConfig {
        alpha,
        tau,
        ..ModulatorConfig::default()
    };
    cfg.validate()?;
    let mut trace = RewardTrace::default();
    let mut out = Vec::with_capacity(2 * rewards.len());
    for &r in rewards {
        trace.step(r, &cfg)?;
        out.push(trace.value);
        out.push(modulation_factor(&trace, &cfg));
    }
    Ok(out)
}

#[wasm_bindgen]
pub fn modulation_curve(rewards: &[f64], alpha: f64, tau: f64) -> Result<Vec<f64>, JsError> {
    modulation_trace(rewards, alpha, tau).map_err(js)
}

/// P(correct) after each trial, replay arm first, then the arm without.
pub fn skinner_arms(seed: u32, trials: u32) -> mhpm::Result<Vec<f64>> {
    let mut cfg = seeded(seed)?;
    cfg.set("env", "M", &trials.to_string())?;
    let mut out = skinner::run_arm(&cfg, true, None)?.p_correct;
    out.extend(skinner::run_arm(&cfg, false, None)?.p_correct);
    Ok(out)
}

#[wasm_bindgen]
pub fn skinner_curves(seed: u32, trials: u32) -> Result<Vec<f64>, JsError> {
    skinner_arms(seed, trials).map_err(js)
}

/// A trained reflex/learned-gaze agent that can be replayed in any task mode.
#[wasm_bindgen]
pub struct GazeDemo {
    cfg: RunConfig,
    agent: Agent,
}

pub const EPISODE_STRIDE: usize = 7;

impl GazeDemo {
    pub fn train(seed: u32) -> mhpm::Result<GazeDemo> {
        let cfg = seeded(seed)?;
        let agent = arbitration::train(&cfg, None)?.agent;
        Ok(GazeDemo { cfg, agent })
    }

    /// Per tick: gaze x, y, target x, y, target visible, fixation on,
    /// learned policy chosen.
    pub fn run_episode(&self, mode: &str, episode_seed: u32) -> mhpm::Result<Vec<f64>> {
        let mode =
            TaskMode::parse(mode).ok_or_else(|| mhpm::Error::Config(format!("unknown task mode `{mode}`")))?;
        let mut env = SaccadeEnv::new(saccade_config(&self.cfg, mode), episode_seed as u64)?;
        let mut obs = env.reset();
        let mut out = Vec::new();
        loop {
            let (action, choice) = self.agent.act_greedy(&obs)?;
            let (next, _, done) = env.step(action)?;
            let (g, t) = (env.gaze(), env.target());
            out.extend([
                g[0],
                g[1],
                t[0],
                t[1],
                env.target_visible() as u8 as f64,
                env.fixation_on() as u8 as f64,
                (choice == Choice::Learned) as u8 as f64,
            ]);
            obs = next;
            if done {
                return Ok(out);
            }
        }
    }
}

#[wasm_bindgen]
impl GazeDemo {
    #[wasm_bindgen(constructor)]
    pub fn new(seed: u32) -> Result<GazeDemo, JsError> {
        GazeDemo::train(seed).map_err(js)
    }

    pub fn episode(&self, mode: &str, episode_seed: u32) -> Result<Vec<f64>, JsError> {
        self.run_episode(mode, episode_seed).map_err(js)
    }

    pub fn stride() -> usize {
        EPISODE_STRIDE
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn factor_follows_the_trace() {
        let out = modulation_trace(&[1.0, 0.0, 0.0], 1.0, 1.0).unwrap();
        let d = (-1.0f64).exp();
        assert_eq!(out[0], 1.0);
        assert_eq!(out[1], 2.0);
        assert!((out[2] - d).abs() < 1e-15);
        assert!((out[5] - (1.0 + d * d)).abs() < 1e-15);
        assert!(modulation_trace(&[1.0], 1.0, 0.0).is_err());
    }

    #[test]
    fn skinner_arms_have_one_value_per_trial() {
        let v = skinner_arms(2, 6).unwrap();
        assert_eq!(v.len(), 12);
        assert!(v.iter().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn episodes_have_fixed_stride() {
        let demo = GazeDemo::train(1).unwrap();
        for mode in TaskMode::ALL {
            let v = demo.run_episode(mode.name(), 3).unwrap();
            assert_eq!(v.len() % EPISODE_STRIDE, 0);
            assert!(!v.is_empty());
        }
        assert!(demo.run_episode("sideways", 3).is_err());
    }
}
