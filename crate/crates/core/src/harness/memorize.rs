//! Two interleaved sequences share a prefix but end differently; only one is
//! rewarded. A single AR unit cannot fit both endings, and the reward-scaled
//! learning rate decides which one it keeps.

use rand::Rng;

use crate::error::Result;
use crate::modulation::{Modulator, ModulatorConfig};
use crate::seed;
use crate::unit::{ArConfig, ArUnit, SignalVector};

#[derive(Debug, Clone, PartialEq)]
pub struct MemorizeConfig {
    pub dim: usize,
    pub window_len: usize,
    /// Consecutive presentations of one sequence before switching.
    pub block_len: usize,
    pub cycles: usize,
    pub base_lr: f64,
    pub modulation: ModulatorConfig,
}

impl Default for MemorizeConfig {
    fn default() -> Self {
        MemorizeConfig {
            dim: 4,
            window_len: 2,
            block_len: 1,
            cycles: 2000,
            base_lr: 0.02,
            // A trace shorter than one period keeps the two sequences'
            // multipliers apart.
            modulation: ModulatorConfig {
                tau: 1.0,
                ..ModulatorConfig::default()
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MemorizeResult {
    pub rewarded_loss: f64,
    pub unrewarded_loss: f64,
}

/// Period-4 sequences `(x1, x2, x3, a)` and `(x1, x2, x3, b)`. Returns the
/// mean pre-update AR loss of each over its presentations in the last tenth
/// of training.
pub fn run(cfg: &MemorizeConfig, seed_value: u64) -> Result<MemorizeResult> {
    let mut rng = seed::stream(seed_value, "memorize/data");
    let mut vec = || SignalVector::new((0..cfg.dim).map(|_| rng.gen_range(-1.0..1.0)).collect());
    let shared = [vec()?, vec()?, vec()?];
    let (end_a, end_b) = (vec()?, vec()?);
    let seq_a: Vec<&SignalVector> = shared.iter().chain([&end_a]).collect();
    let seq_b: Vec<&SignalVector> = shared.iter().chain([&end_b]).collect();
    let mut unit = ArUnit::new(
        &ArConfig {
            window_len: cfg.window_len,
            input_dim: cfg.dim,
            context_dim: 0,
            hidden_dim: None,
            base_lr: cfg.base_lr,
        },
        &mut seed::stream(seed_value, "memorize/unit"),
    )?;
    let mut modulator = Modulator::new(cfg.modulation.clone())?;
    let ctx = SignalVector::zeros(0);
    let total = 8 * cfg.block_len * cfg.cycles;
    let tail = total - total / 10;
    let (mut sa, mut na, mut sb, mut nb) = (0.0, 0u64, 0.0, 0u64);
    let mut t = 0;
    for _ in 0..cfg.cycles {
        for rewarded in [true, false] {
            let seq = if rewarded { &seq_a } else { &seq_b };
            for i in 0..4 * cfg.block_len {
                modulator.step(if rewarded { 1.0 } else { 0.0 }, None)?;
                let eta = cfg.base_lr * modulator.factor();
                let loss = unit.observe(&ctx, seq[i % 4], eta)?;
                if t >= tail {
                    if rewarded {
                        sa += loss;
                        na += 1;
                    } else {
                        sb += loss;
                        nb += 1;
                    }
                }
                t += 1;
            }
        }
    }
    Ok(MemorizeResult {
        rewarded_loss: sa / na.max(1) as f64,
        unrewarded_loss: sb / nb.max(1) as f64,
    })
}
