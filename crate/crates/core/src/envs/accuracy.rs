use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::unit::SignalVector;

/// Distractors drawn per scored prediction; chance accuracy is 1/10.
pub const DISTRACTORS: usize = 9;
/// Recent inputs a node keeps for distractor sampling.
pub const POOL_CAPACITY: usize = 100;

/// 1 when `target` is strictly the nearest of `{target} ∪ distractors` to
/// `prediction` in Euclidean distance, else 0. Ties score 0.
pub fn rank_accuracy(prediction: &SignalVector, target: &SignalVector, distractors: &[SignalVector]) -> Result<u8> {
    if distractors.is_empty() {
        return Err(Error::contract("rank accuracy needs at least one distractor"));
    }
    if target.dim() != prediction.dim() {
        return Err(Error::dims("rank accuracy target", prediction.dim(), target.dim()));
    }
    if let Some(d) = distractors.iter().find(|d| d.dim() != prediction.dim()) {
        return Err(Error::dims("rank accuracy distractor", prediction.dim(), d.dim()));
    }
    let dt = prediction.distance_sq(target);
    Ok(distractors.iter().all(|d| prediction.distance_sq(d) > dt) as u8)
}

/// 1 when the largest components of prediction and target coincide.
pub fn argmax_accuracy(prediction: &SignalVector, target: &SignalVector) -> u8 {
    (prediction.argmax().is_some() && prediction.argmax() == target.argmax()) as u8
}

/// The last [`POOL_CAPACITY`] inputs seen by one node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct DistractorPool {
    items: VecDeque<SignalVector>,
}

impl DistractorPool {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, v: SignalVector) {
        if self.items.len() == POOL_CAPACITY {
            self.items.pop_front();
        }
        self.items.push_back(v);
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> impl Iterator<Item = &SignalVector> {
        self.items.iter()
    }

    /// Draws `n` distractors uniformly with replacement from pooled inputs
    /// that differ from `target`. `None` when no such input exists.
    pub fn sample<R: Rng + ?Sized>(&self, n: usize, target: &SignalVector, rng: &mut R) -> Option<Vec<SignalVector>> {
        let candidates: Vec<&SignalVector> = self.items.iter().filter(|v| *v != target).collect();
        if candidates.is_empty() {
            return None;
        }
        Some(
            (0..n)
                .map(|_| candidates[rng.gen_range(0..candidates.len())].clone())
                .collect(),
        )
    }
}
