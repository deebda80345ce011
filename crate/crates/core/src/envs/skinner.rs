use rand::Rng;

use super::action::{Action, Button};
use crate::error::{Error, Result};
use crate::seed;
use crate::unit::SignalVector;

/// Two lit buttons; what the agent sees never changes.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinnerObservation {
    pub features: SignalVector,
}

/// Two-button operant box. One button, fixed by the seed, pays +1 and the
/// other −1. The run ends after `max_trials` presses.
#[derive(Debug, Clone, PartialEq)]
pub struct SkinnerBoxEnv {
    good: Button,
    trials: u32,
    max_trials: u32,
}

impl SkinnerBoxEnv {
    pub const FEATURES: usize = 3;

    pub fn new(seed: u64, max_trials: u32) -> Self {
        let mut rng = seed::stream(seed, "skinner");
        let good = if rng.gen_bool(0.5) { Button::Blue } else { Button::Red };
        SkinnerBoxEnv {
            good,
            trials: 0,
            max_trials,
        }
    }

    pub fn good_button(&self) -> Button {
        self.good
    }

    pub fn trials(&self) -> u32 {
        self.trials
    }

    pub fn max_trials(&self) -> u32 {
        self.max_trials
    }

    pub fn done(&self) -> bool {
        self.trials >= self.max_trials
    }

    pub fn observe(&self) -> SkinnerObservation {
        SkinnerObservation {
            features: SignalVector::from_vec_unchecked(vec![1.0; Self::FEATURES]),
        }
    }

    pub fn step(&mut self, action: Action) -> Result<(SkinnerObservation, f64, bool)> {
        if self.done() {
            return Err(Error::contract("skinner box stepped after its last trial"));
        }
        let reward = match action {
            Action::Wait => 0.0,
            Action::Press(b) => {
                self.trials += 1;
                if b == self.good {
                    1.0
                } else {
                    -1.0
                }
            }
            Action::Gaze(_) => return Err(Error::contract("skinner box takes press or wait actions")),
        };
        Ok((self.observe(), reward, self.done()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rewards_follow_mapping() {
        let mut env = SkinnerBoxEnv::new(3, 10);
        assert_eq!(env.step(Action::Wait).unwrap().1, 0.0);
        let good = env.good_button();
        assert_eq!(env.step(Action::Press(good)).unwrap().1, 1.0);
        assert_eq!(env.step(Action::Press(good.other())).unwrap().1, -1.0);
        assert_eq!(env.trials(), 2);
    }

    #[test]
    fn done_after_max_trials() {
        let mut env = SkinnerBoxEnv::new(3, 2);
        env.step(Action::Press(Button::Blue)).unwrap();
        let (_, _, done) = env.step(Action::Press(Button::Red)).unwrap();
        assert!(done);
        assert!(env.step(Action::Wait).is_err());
    }

    #[test]
    fn mapping_is_seeded() {
        assert_eq!(SkinnerBoxEnv::new(9, 5), SkinnerBoxEnv::new(9, 5));
        let goods: std::collections::BTreeSet<_> = (0..20).map(|s| SkinnerBoxEnv::new(s, 1).good_button()).collect();
        assert_eq!(goods.len(), 2);
    }
}
