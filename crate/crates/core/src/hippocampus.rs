//! Salience-gated episodic memory and offline replay into a decision learner.

use std::collections::VecDeque;
use std::io::Write;

use rand::Rng;

use crate::envs::Action;
use crate::error::{Error, Result};
use crate::modulation::ModulatorConfig;
use crate::modulation::{modulation_factor, RewardTrace};
use crate::unit::SignalVector;

#[derive(Debug, Clone, PartialEq)]
pub struct Step {
    pub observation: SignalVector,
    pub action: Action,
    pub reward: f64,
    pub tick: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Episode {
    pub steps: Vec<Step>,
    /// Tick of the step that triggered the snapshot.
    pub salient_tick: u64,
}

impl Episode {
    pub fn first_tick(&self) -> u64 {
        self.steps.first().map_or(0, |s| s.tick)
    }

    pub fn last_tick(&self) -> u64 {
        self.steps.last().map_or(0, |s| s.tick)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BufferConfig {
    pub capacity: usize,
    pub window: usize,
    pub salience_threshold: f64,
}

impl Default for BufferConfig {
    fn default() -> Self {
        BufferConfig {
            capacity: 32,
            window: 8,
            salience_threshold: 0.5,
        }
    }
}

#[derive(Debug, Clone)]
struct Pending {
    steps: Vec<Step>,
    salient_tick: u64,
    remaining: usize,
}

#[derive(Debug, Clone)]
pub struct EpisodeBuffer {
    cfg: BufferConfig,
    rolling: VecDeque<Step>,
    pending: Vec<Pending>,
    episodes: VecDeque<Episode>,
    last_tick: Option<u64>,
}

impl EpisodeBuffer {
    pub fn new(cfg: BufferConfig) -> Result<Self> {
        if cfg.capacity == 0 || cfg.window == 0 || !(cfg.salience_threshold >= 0.0) {
            return Err(Error::Config(format!(
                "episode buffer needs capacity >= 1, window >= 1, threshold >= 0; got {cfg:?}"
            )));
        }
        Ok(EpisodeBuffer {
            cfg,
            rolling: VecDeque::new(),
            pending: Vec::new(),
            episodes: VecDeque::new(),
            last_tick: None,
        })
    }

    pub fn config(&self) -> &BufferConfig {
        &self.cfg
    }

    pub fn episodes(&self) -> &VecDeque<Episode> {
        &self.episodes
    }

    pub fn len(&self) -> usize {
        self.episodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.episodes.is_empty()
    }

    fn store(&mut self, ep: Episode) {
        if self.episodes.len() == self.cfg.capacity {
            self.episodes.pop_front();
        }
        self.episodes.push_back(ep);
    }

    pub fn observe(&mut self, step: Step) -> Result<()> {
        if !step.reward.is_finite() {
            return Err(Error::NonFinite("step reward"));
        }
        if self.last_tick.is_some_and(|t| step.tick <= t) {
            return Err(Error::contract(format!(
                "step tick {} does not follow tick {}",
                step.tick,
                self.last_tick.unwrap_or(0)
            )));
        }
        self.last_tick = Some(step.tick);
        let w = self.cfg.window;

        let mut done = Vec::new();
        for (i, p) in self.pending.iter_mut().enumerate() {
            p.steps.push(step.clone());
            p.remaining -= 1;
            if p.remaining == 0 {
                done.push(i);
            }
        }
        for i in done.into_iter().rev() {
            let p = self.pending.remove(i);
            self.store(Episode {
                steps: p.steps,
                salient_tick: p.salient_tick,
            });
        }

        if step.reward.abs() >= self.cfg.salience_threshold {
            let start = self.rolling.len().saturating_sub(w);
            let mut steps: Vec<Step> = self.rolling.range(start..).cloned().collect();
            steps.push(step.clone());
            let p = Pending {
                steps,
                salient_tick: step.tick,
                remaining: w - 1,
            };
            if p.remaining == 0 {
                self.store(Episode {
                    steps: p.steps,
                    salient_tick: p.salient_tick,
                });
            } else {
                self.pending.push(p);
            }
        }

        self.rolling.push_back(step);
        while self.rolling.len() > 2 * w {
            self.rolling.pop_front();
        }
        Ok(())
    }

    /// CSV dump: `salient_tick,first_tick,last_tick,steps,reward_sum`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "salient_tick,first_tick,last_tick,steps,reward_sum")?;
        for e in &self.episodes {
            let r: f64 = e.steps.iter().map(|s| s.reward).sum();
            writeln!(w, "{},{},{},{},{:.9}", e.salient_tick, e.first_tick(), e.last_tick(), e.steps.len(), r)?;
        }
        Ok(())
    }
}

/// Anything that can be trained from a remembered step. `eta_scale`
/// multiplies the learner's own base rate.
pub trait ReplayLearner {
    fn train_step(&mut self, step: &Step, eta_scale: f64) -> Result<()>;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ReplayReport {
    pub episodes: usize,
    pub steps: usize,
}

/// Each pass draws `len` episodes uniformly with replacement and re-presents
/// every step with scale `factor(reward)·boost`.
pub fn replay<L: ReplayLearner + ?Sized, R: Rng + ?Sized>(
    buffer: &EpisodeBuffer,
    learner: &mut L,
    n_passes: usize,
    boost: f64,
    modulation: &ModulatorConfig,
    rng: &mut R,
) -> Result<ReplayReport> {
    if !(boost > 0.0 && boost.is_finite()) {
        return Err(Error::contract(format!("replay boost must be positive, got {boost}")));
    }
    let mut report = ReplayReport::default();
    let n = buffer.len();
    if n == 0 {
        return Ok(report);
    }
    for _ in 0..n_passes {
        for _ in 0..n {
            let ep = &buffer.episodes[rng.gen_range(0..n)];
            for step in &ep.steps {
                let m = modulation_factor(&RewardTrace { value: step.reward }, modulation);
                learner.train_step(step, m * boost)?;
                report.steps += 1;
            }
            report.episodes += 1;
        }
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn step(tick: u64, reward: f64) -> Step {
        Step {
            observation: SignalVector::new(vec![tick as f64]).unwrap(),
            action: Action::Wait,
            reward,
            tick,
        }
    }

    fn buffer(capacity: usize) -> EpisodeBuffer {
        EpisodeBuffer::new(BufferConfig {
            capacity,
            ..BufferConfig::default()
        })
        .unwrap()
    }

    #[derive(Default)]
    struct Recorder(Vec<(Step, f64)>);

    impl ReplayLearner for Recorder {
        fn train_step(&mut self, step: &Step, eta_scale: f64) -> Result<()> {
            self.0.push((step.clone(), eta_scale));
            Ok(())
        }
    }

    #[test]
    fn no_reward_no_episodes() {
        let mut b = buffer(32);
        for t in 0..200 {
            b.observe(step(t, 0.0)).unwrap();
        }
        assert!(b.is_empty());
    }

    #[test]
    fn window_arithmetic() {
        let mut b = buffer(32);
        for t in 0..=120 {
            b.observe(step(t, if t == 100 { 1.0 } else { 0.0 })).unwrap();
        }
        assert_eq!(b.len(), 1);
        let e = &b.episodes()[0];
        assert_eq!((e.first_tick(), e.last_tick(), e.steps.len()), (92, 107, 16));
    }

    #[test]
    fn fifo_eviction() {
        let mut b = buffer(2);
        for t in 0..200 {
            let r = if t == 50 || t == 100 || t == 150 { -1.0 } else { 0.0 };
            b.observe(step(t, r)).unwrap();
        }
        let s: Vec<_> = b.episodes().iter().map(|e| e.salient_tick).collect();
        assert_eq!(s, vec![100, 150]);
    }

    #[test]
    fn non_monotone_tick_rejected() {
        let mut b = buffer(2);
        b.observe(step(5, 0.0)).unwrap();
        assert!(b.observe(step(5, 0.0)).is_err());
    }

    #[test]
    fn replay_counts_and_fidelity() {
        let mut b = buffer(32);
        for t in 0..30 {
            b.observe(step(t, if t == 10 { 1.0 } else { 0.0 })).unwrap();
        }
        let cfg = ModulatorConfig::default();
        let mut rng = seed::stream(1, "replay");
        let mut rec = Recorder::default();
        let rep = replay(&b, &mut rec, 1, 1.0, &cfg, &mut rng).unwrap();
        assert_eq!(rep, ReplayReport { episodes: 1, steps: 16 });
        assert_eq!(rec.0.len(), 16);
        for ((s, m), orig) in rec.0.iter().zip(&b.episodes()[0].steps) {
            assert_eq!(s, orig);
            assert_eq!(*m, if s.reward == 1.0 { 2.0 } else { 1.0 });
        }
        let mut rec = Recorder::default();
        assert_eq!(replay(&b, &mut rec, 0, 1.0, &cfg, &mut rng).unwrap(), ReplayReport::default());
        let empty = buffer(3);
        assert_eq!(replay(&empty, &mut rec, 5, 1.0, &cfg, &mut rng).unwrap().steps, 0);
        assert!(rec.0.is_empty());
    }

    #[test]
    fn csv_dump() {
        let mut b = buffer(4);
        for t in 0..20 {
            b.observe(step(t, if t == 9 { 1.0 } else { 0.0 })).unwrap();
        }
        let mut out = Vec::new();
        b.write_csv(&mut out).unwrap();
        assert_eq!(
            String::from_utf8(out).unwrap(),
            "salient_tick,first_tick,last_tick,steps,reward_sum\n9,1,16,16,1.000000000\n"
        );
    }
}
