//! Innate machinery: a fixed pro-saccade reflex, a learned gaze proposal and
//! a reward-trained arbitrator choosing between them per discrete context.

use std::collections::BTreeMap;
use std::io::Write;

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::envs::{Action, FixationColor, SaccadeObservation};
use crate::error::{Error, Result};
use crate::unit::{default_hidden, SignalVector, TrainableMap, UnitTag};

/// Proportional foveation reflex. Parameters are fixed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct ReflexPolicy {
    gain: f64,
    max_step: f64,
}

impl ReflexPolicy {
    pub fn new(gain: f64, max_step: f64) -> Result<Self> {
        if !(gain > 0.0 && gain.is_finite() && max_step > 0.0 && max_step.is_finite()) {
            return Err(Error::Config(format!("reflex gain and max_step must be positive, got {gain}, {max_step}")));
        }
        Ok(ReflexPolicy { gain, max_step })
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    pub fn max_step(&self) -> f64 {
        self.max_step
    }

    /// Saccade toward a salient target; zero move otherwise.
    pub fn act(&self, obs: &SaccadeObservation) -> Action {
        if !obs.salient_motion {
            return Action::zero_gaze();
        }
        let o = obs.retinal_offset;
        Action::gaze_clamped([self.gain * o[0], self.gain * o[1]], self.max_step)
    }
}

impl Default for ReflexPolicy {
    fn default() -> Self {
        ReflexPolicy {
            gain: 1.0,
            max_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Choice {
    Reflex,
    Learned,
}

impl Choice {
    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Choice::Reflex => "reflex",
            Choice::Learned => "learned",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContextKey {
    pub fixation_color: FixationColor,
    pub fixation_on: bool,
    pub salient_motion: bool,
}

impl ContextKey {
    pub fn of(obs: &SaccadeObservation) -> Self {
        ContextKey {
            fixation_color: obs.fixation_color,
            fixation_on: obs.fixation_on,
            salient_motion: obs.salient_motion,
        }
    }

    pub fn label(&self) -> String {
        let color = match self.fixation_color {
            FixationColor::Red => "red",
            FixationColor::Green => "green",
            FixationColor::None => "none",
        };
        format!(
            "{color}/{}/{}",
            if self.fixation_on { "on" } else { "off" },
            if self.salient_motion { "motion" } else { "still" }
        )
    }
}

/// Tabular preferences over (reflex, learned) per context.
#[derive(Debug, Clone, PartialEq)]
pub struct Arbitrator {
    prefs: BTreeMap<ContextKey, [f64; 2]>,
    pub epsilon: f64,
}

impl Arbitrator {
    pub fn new(epsilon: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(Error::Config(format!("epsilon must lie in [0, 1], got {epsilon}")));
        }
        Ok(Arbitrator {
            prefs: BTreeMap::new(),
            epsilon,
        })
    }

    pub fn preference(&self, ctx: &ContextKey) -> [f64; 2] {
        self.prefs.get(ctx).copied().unwrap_or([0.0, 0.0])
    }

    pub fn table(&self) -> &BTreeMap<ContextKey, [f64; 2]> {
        &self.prefs
    }

    pub fn set_preference(&mut self, ctx: ContextKey, pref: [f64; 2]) -> Result<()> {
        if !pref.iter().all(|p| p.is_finite()) {
            return Err(Error::NonFinite("arbitrator preference"));
        }
        self.prefs.insert(ctx, pref);
        Ok(())
    }

    /// Greedy choice with ties going to the reflex; uniform with probability
    /// `epsilon`.
    pub fn choose<R: Rng + ?Sized>(&self, ctx: &ContextKey, rng: &mut R) -> Choice {
        if self.epsilon > 0.0 && rng.gen::<f64>() < self.epsilon {
            return if rng.gen_bool(0.5) { Choice::Reflex } else { Choice::Learned };
        }
        let p = self.preference(ctx);
        if p[1] > p[0] {
            Choice::Learned
        } else {
            Choice::Reflex
        }
    }

    pub fn arbitrate<R: Rng + ?Sized>(
        &self,
        reflex: Action,
        learned: Action,
        ctx: &ContextKey,
        rng: &mut R,
    ) -> (Action, Choice) {
        match self.choose(ctx, rng) {
            Choice::Reflex => (reflex, Choice::Reflex),
            Choice::Learned => (learned, Choice::Learned),
        }
    }

    /// `preference[ctx][chosen] += eta·reward`
    pub fn update(&mut self, ctx: ContextKey, chosen: Choice, reward: f64, eta: f64) -> Result<()> {
        if !(eta >= 0.0 && eta.is_finite() && reward.is_finite()) {
            return Err(Error::contract(format!("arbitrator update needs finite reward and eta >= 0, got {reward}, {eta}")));
        }
        let delta = eta * reward;
        if delta == 0.0 {
            return Ok(());
        }
        let mut p = self.preference(&ctx);
        p[chosen.index()] += delta;
        self.set_preference(ctx, p)
    }

    /// CSV dump: `context,pref_reflex,pref_learned`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "context,pref_reflex,pref_learned")?;
        for (k, p) in &self.prefs {
            writeln!(w, "{},{:.9},{:.9}", k.label(), p[0], p[1])?;
        }
        Ok(())
    }
}

/// Placeholder for the affective mode controller. It is carried in the
/// agent state but never changes behavior.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AmygdalaMode {
    Fight,
    Flight,
    #[default]
    Curious,
    Bored,
}

/// Trainable gaze proposal: observation → displacement, plus exploration
/// noise. Offsets enter and moves leave the map in units of `max_step`. The
/// output layer starts at zero, so the untrained proposal is "hold".
#[derive(Debug, Clone)]
pub struct LearnedGaze {
    map: TrainableMap,
    noise: Normal<f64>,
    pub max_step: f64,
    pub base_lr: f64,
}

impl LearnedGaze {
    pub fn new<R: Rng + ?Sized>(noise_sigma: f64, max_step: f64, base_lr: f64, rng: &mut R) -> Result<Self> {
        if !(max_step > 0.0) {
            return Err(Error::Config(format!("learned gaze max_step must be positive, got {max_step}")));
        }
        let noise = Normal::new(0.0, noise_sigma).map_err(|e| Error::Config(e.to_string()))?;
        let in_dim = SaccadeObservation::FEATURES;
        let mut map = TrainableMap::random(in_dim, default_hidden(in_dim, 2), 2, UnitTag::fresh(), rng);
        let mut p = map.params();
        let first_layer = map.hidden_dim() * (in_dim + 1);
        p[first_layer..].iter_mut().for_each(|v| *v = 0.0);
        map.set_params(&p)?;
        Ok(LearnedGaze {
            map,
            noise,
            max_step,
            base_lr,
        })
    }

    pub fn map(&self) -> &TrainableMap {
        &self.map
    }

    pub fn map_mut(&mut self) -> &mut TrainableMap {
        &mut self.map
    }

    /// Observation features with both offsets divided by `max_step`.
    pub fn input(&self, obs: &SaccadeObservation) -> SignalVector {
        let mut f = obs.features().into_vec();
        for i in [0, 1, 3, 4] {
            f[i] /= self.max_step;
        }
        SignalVector::from_vec_unchecked(f)
    }

    pub fn greedy(&self, obs: &SaccadeObservation) -> Result<Action> {
        let y = self.map.forward(&self.input(obs))?;
        let y = y.as_slice();
        Ok(Action::gaze_clamped([y[0] * self.max_step, y[1] * self.max_step], self.max_step))
    }

    pub fn propose<R: Rng + ?Sized>(&self, obs: &SaccadeObservation, rng: &mut R) -> Result<Action> {
        let y = self.map.forward(&self.input(obs))?;
        let y = y.as_slice();
        let n = [self.noise.sample(rng), self.noise.sample(rng)];
        Ok(Action::gaze_clamped(
            [y[0] * self.max_step + n[0], y[1] * self.max_step + n[1]],
            self.max_step,
        ))
    }

    /// One imitation step toward the executed move at rate `base_lr·r·m`.
    /// Moves that earned nothing on their own tick are never imitated.
    pub fn reinforce(&mut self, obs: &SaccadeObservation, executed: Action, reward: f64, m: f64) -> Result<f64> {
        let d = executed
            .dgaze()
            .ok_or_else(|| Error::contract("learned gaze trains on gaze actions only"))?;
        let target = SignalVector::new(vec![d[0] / self.max_step, d[1] / self.max_step])?;
        self.map.update(&self.input(obs), &target, self.base_lr * reward.max(0.0) * m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seed;

    fn obs(offset: [f64; 2], salient: bool, color: FixationColor) -> SaccadeObservation {
        SaccadeObservation {
            retinal_offset: offset,
            salient_motion: salient,
            fixation_pos: [0.5, 0.5],
            fixation_offset: [0.0, 0.0],
            fixation_on: color != FixationColor::None,
            fixation_color: color,
        }
    }

    #[test]
    fn reflex_clamps() {
        let r = ReflexPolicy::default();
        assert_eq!(r.act(&obs([0.2, 0.0], true, FixationColor::None)), Action::Gaze([0.1, 0.0]));
        assert_eq!(r.act(&obs([0.2, 0.0], false, FixationColor::None)), Action::zero_gaze());
        // the reflex ignores the anti cue
        assert_eq!(r.act(&obs([0.05, -0.03], true, FixationColor::Green)), Action::Gaze([0.05, -0.03]));
    }

    #[test]
    fn tie_goes_to_reflex() {
        let a = Arbitrator::new(0.0).unwrap();
        let ctx = ContextKey::of(&obs([0.0; 2], true, FixationColor::Red));
        let mut rng = seed::stream(1, "t");
        let (act, c) = a.arbitrate(Action::Gaze([0.1, 0.0]), Action::zero_gaze(), &ctx, &mut rng);
        assert_eq!((act, c), (Action::Gaze([0.1, 0.0]), Choice::Reflex));
    }

    #[test]
    fn argmax_and_update() {
        let mut a = Arbitrator::new(0.0).unwrap();
        let ctx = ContextKey::of(&obs([0.0; 2], true, FixationColor::Red));
        let mut rng = seed::stream(1, "t");
        a.update(ctx, Choice::Learned, 0.0, 0.5).unwrap();
        assert!(a.table().is_empty());
        a.update(ctx, Choice::Learned, 1.0, 0.5).unwrap();
        assert_eq!(a.preference(&ctx), [0.0, 0.5]);
        a.set_preference(ctx, [0.0, 5.0]).unwrap();
        assert_eq!(a.choose(&ctx, &mut rng), Choice::Learned);
        a.set_preference(ctx, [1.0, 2.0]).unwrap();
        let before = a.choose(&ctx, &mut rng);
        a.set_preference(ctx, [7.0, 14.0]).unwrap();
        assert_eq!(a.choose(&ctx, &mut rng), before);
    }

    #[test]
    fn epsilon_one_follows_seeded_coin() {
        let a = Arbitrator::new(1.0).unwrap();
        let ctx = ContextKey::of(&obs([0.0; 2], false, FixationColor::None));
        let mut rng = seed::stream(7, "arb");
        let mut oracle = seed::stream(7, "arb");
        for _ in 0..200 {
            let got = a.choose(&ctx, &mut rng);
            let _: f64 = oracle.gen();
            let want = if oracle.gen_bool(0.5) { Choice::Reflex } else { Choice::Learned };
            assert_eq!(got, want);
        }
    }

    #[test]
    fn learned_gaze_starts_silent() {
        let g = LearnedGaze::new(0.01, 0.1, 0.1, &mut seed::stream(2, "g")).unwrap();
        assert_eq!(g.greedy(&obs([0.3, -0.2], true, FixationColor::Red)).unwrap(), Action::zero_gaze());
    }

    #[test]
    fn preference_csv() {
        let mut a = Arbitrator::new(0.1).unwrap();
        a.update(ContextKey::of(&obs([0.0; 2], true, FixationColor::Red)), Choice::Learned, 1.0, 0.25).unwrap();
        let mut out = Vec::new();
        a.write_csv(&mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "context,pref_reflex,pref_learned\nred/on/motion,0.000000000,0.250000000\n");
    }
}
