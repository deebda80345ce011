//! Reward system: a decaying reward trace mapped to one global learning-rate
//! multiplier, plus a weak intrinsic reward from prediction-error improvement.

use crate::error::{Error, Result};

/// Ticks per simulated second. The ~2.5 s lifetime of a reward effect
/// becomes a decay constant of 25 ticks.
pub const TICKS_PER_SECOND: f64 = 10.0;

#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorConfig {
    pub alpha: f64,
    /// Decay time constant in ticks.
    pub tau: f64,
    pub m_min: f64,
    pub m_max: f64,
    pub intrinsic_gain: f64,
    /// EMA factor for the error baseline, in (0, 1].
    pub err_smooth: f64,
}

impl Default for ModulatorConfig {
    fn default() -> Self {
        ModulatorConfig {
            alpha: 1.0,
            tau: 2.5 * TICKS_PER_SECOND,
            m_min: 0.0,
            m_max: 5.0,
            intrinsic_gain: 0.1,
            err_smooth: 0.05,
        }
    }
}

impl ModulatorConfig {
    pub fn validate(&self) -> Result<()> {
        let ok = self.tau > 0.0
            && self.tau.is_finite()
            && 0.0 <= self.m_min
            && self.m_min < 1.0
            && 1.0 < self.m_max
            && self.alpha.is_finite()
            && self.intrinsic_gain >= 0.0
            && self.err_smooth > 0.0
            && self.err_smooth <= 1.0;
        if ok {
            Ok(())
        } else {
            Err(Error::Config(format!(
                "modulation requires tau > 0, 0 <= m_min < 1 < m_max, intrinsic_gain >= 0, err_smooth in (0,1]; got {self:?}"
            )))
        }
    }

    /// Per-tick decay factor `exp(-1/tau)`.
    pub fn decay(&self) -> f64 {
        (-1.0 / self.tau).exp()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RewardTrace {
    pub value: f64,
}

impl RewardTrace {
    /// `value ← value·exp(−1/tau) + reward`
    pub fn step(&mut self, reward: f64, cfg: &ModulatorConfig) -> Result<()> {
        if !reward.is_finite() {
            return Err(Error::NonFinite("reward"));
        }
        self.value = self.value * cfg.decay() + reward;
        Ok(())
    }
}

/// `clamp(1 + alpha·trace, m_min, m_max)`
pub fn modulation_factor(trace: &RewardTrace, cfg: &ModulatorConfig) -> f64 {
    (1.0 + cfg.alpha * trace.value).clamp(cfg.m_min, cfg.m_max)
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ErrorBaseline {
    pub smoothed_err: f64,
}

/// Returns `gain·(smoothed − current)` and then moves the baseline toward
/// `current`.
pub fn intrinsic_reward(baseline: &mut ErrorBaseline, current_err: f64, cfg: &ModulatorConfig) -> Result<f64> {
    if !(current_err >= 0.0 && current_err.is_finite()) {
        return Err(Error::contract(format!("prediction error must be finite and >= 0, got {current_err}")));
    }
    let r = cfg.intrinsic_gain * (baseline.smoothed_err - current_err);
    baseline.smoothed_err = (1.0 - cfg.err_smooth) * baseline.smoothed_err + cfg.err_smooth * current_err;
    Ok(r)
}

/// Trace, baseline and config bundled for an experiment loop.
#[derive(Debug, Clone, PartialEq)]
pub struct Modulator {
    pub config: ModulatorConfig,
    pub trace: RewardTrace,
    pub baseline: ErrorBaseline,
}

impl Modulator {
    pub fn new(config: ModulatorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Modulator {
            config,
            trace: RewardTrace::default(),
            baseline: ErrorBaseline::default(),
        })
    }

    /// Adds extrinsic reward and, when a top-layer error is given, the
    /// intrinsic reward into the single trace. Returns the intrinsic part.
    pub fn step(&mut self, extrinsic: f64, top_error: Option<f64>) -> Result<f64> {
        let r_int = match top_error {
            Some(e) => intrinsic_reward(&mut self.baseline, e, &self.config)?,
            None => 0.0,
        };
        self.trace.step(extrinsic + r_int, &self.config)?;
        Ok(r_int)
    }

    pub fn factor(&self) -> f64 {
        modulation_factor(&self.trace, &self.config)
    }

    /// Multiplier for a reward treated as if it had just arrived on an empty
    /// trace.
    pub fn factor_for_reward(&self, reward: f64) -> f64 {
        modulation_factor(&RewardTrace { value: reward }, &self.config)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModulatorConfig {
        ModulatorConfig::default()
    }

    #[test]
    fn defaults() {
        let c = cfg();
        assert_eq!(c.tau, 25.0);
        c.validate().unwrap();
    }

    #[test]
    fn trace_formula() {
        let mut t = RewardTrace::default();
        t.step(1.0, &cfg()).unwrap();
        assert_eq!(t.value, 1.0);
        let c1 = ModulatorConfig { tau: 1.0, ..cfg() };
        let mut t = RewardTrace { value: 1.0 };
        t.step(0.0, &c1).unwrap();
        assert!((t.value - 0.36787944117144233).abs() < 1e-15);
        assert!(t.step(f64::NAN, &c1).is_err());
    }

    #[test]
    fn steady_state_matches_geometric_series() {
        // Oracle: closed-form sum of the geometric series.
        let c = cfg();
        let expected = 1.0 / (1.0 - (-1.0 / c.tau).exp());
        assert!((expected - 25.5).abs() < 0.01);
        let mut t = RewardTrace::default();
        for _ in 0..1000 {
            t.step(1.0, &c).unwrap();
        }
        assert!((t.value - expected).abs() < 1e-9);
    }

    #[test]
    fn factor_formula_and_clamp() {
        let c = cfg();
        assert_eq!(modulation_factor(&RewardTrace { value: 0.0 }, &c), 1.0);
        assert_eq!(modulation_factor(&RewardTrace { value: 0.5 }, &c), 1.5);
        assert_eq!(modulation_factor(&RewardTrace { value: -10.0 }, &c), 0.0);
        assert_eq!(modulation_factor(&RewardTrace { value: 100.0 }, &c), 5.0);
    }

    #[test]
    fn intrinsic_examples() {
        let c = cfg();
        let mut b = ErrorBaseline { smoothed_err: 0.5 };
        let r = intrinsic_reward(&mut b, 0.3, &c).unwrap();
        assert!((r - 0.02).abs() < 1e-15);
        assert!((b.smoothed_err - (0.95 * 0.5 + 0.05 * 0.3)).abs() < 1e-15);
        let mut b = ErrorBaseline { smoothed_err: 0.3 };
        assert!((intrinsic_reward(&mut b, 0.5, &c).unwrap() + 0.02).abs() < 1e-15);
        let c0 = ModulatorConfig { intrinsic_gain: 0.0, ..c };
        let mut b = ErrorBaseline { smoothed_err: 0.9 };
        assert_eq!(intrinsic_reward(&mut b, 0.1, &c0).unwrap(), 0.0);
        assert!(intrinsic_reward(&mut b, -0.1, &c0).is_err());
    }

    #[test]
    fn zero_rewards_keep_baseline_learning() {
        let mut m = Modulator::new(cfg()).unwrap();
        for _ in 0..200 {
            m.step(0.0, None).unwrap();
            assert_eq!(m.factor(), 1.0);
        }
    }

    #[test]
    fn impulse_recovers() {
        let c = cfg();
        let mut m = Modulator::new(c.clone()).unwrap();
        m.step(1.0, None).unwrap();
        let n = (c.tau * 100f64.ln()).ceil() as usize;
        for _ in 0..n {
            m.step(0.0, None).unwrap();
        }
        assert!((m.factor() - 1.0).abs() < 0.01 * c.alpha);
    }

    #[test]
    fn invalid_config() {
        assert!(ModulatorConfig { m_min: 1.0, ..cfg() }.validate().is_err());
        assert!(ModulatorConfig { tau: 0.0, ..cfg() }.validate().is_err());
    }
}
