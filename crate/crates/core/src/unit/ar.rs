use std::collections::VecDeque;

use rand::Rng;

use super::audit::{self, UnitTag};
use super::map::{check_eta, default_hidden, sq_error, TrainableMap};
use super::signal::SignalVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct ArConfig {
    pub window_len: usize,
    pub input_dim: usize,
    pub context_dim: usize,
    /// `None` selects `2·max(in, out)`.
    pub hidden_dim: Option<usize>,
    pub base_lr: f64,
}

/// Autoregressive next-vector predictor over a fixed window plus a context.
#[derive(Debug, Clone, PartialEq)]
pub struct ArUnit {
    window_len: usize,
    input_dim: usize,
    context_dim: usize,
    map: TrainableMap,
    window: VecDeque<SignalVector>,
    base_lr: f64,
    tag: UnitTag,
}

impl ArUnit {
    pub fn new<R: Rng + ?Sized>(cfg: &ArConfig, rng: &mut R) -> Result<Self> {
        if cfg.window_len == 0 || cfg.input_dim == 0 {
            return Err(Error::contract("AR window length and input dim must be positive"));
        }
        if !(cfg.base_lr > 0.0 && cfg.base_lr.is_finite()) {
            return Err(Error::contract("AR base_lr must be positive"));
        }
        let in_dim = cfg.window_len * cfg.input_dim + cfg.context_dim;
        let hidden = cfg.hidden_dim.unwrap_or_else(|| default_hidden(in_dim, cfg.input_dim));
        let tag = UnitTag::fresh();
        Ok(ArUnit {
            window_len: cfg.window_len,
            input_dim: cfg.input_dim,
            context_dim: cfg.context_dim,
            map: TrainableMap::random(in_dim, hidden, cfg.input_dim, tag, rng),
            window: VecDeque::with_capacity(cfg.window_len),
            base_lr: cfg.base_lr,
            tag,
        })
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn context_dim(&self) -> usize {
        self.context_dim
    }

    pub fn base_lr(&self) -> f64 {
        self.base_lr
    }

    pub fn tag(&self) -> UnitTag {
        self.tag
    }

    pub fn map(&self) -> &TrainableMap {
        &self.map
    }

    pub fn map_mut(&mut self) -> &mut TrainableMap {
        &mut self.map
    }

    /// Window contents, oldest first (without padding).
    pub fn window(&self) -> impl Iterator<Item = &SignalVector> {
        self.window.iter()
    }

    pub(crate) fn restore_window(&mut self, items: Vec<SignalVector>) -> Result<()> {
        if items.len() > self.window_len || items.iter().any(|v| v.dim() != self.input_dim) {
            return Err(Error::contract("restored AR window does not fit the unit"));
        }
        self.window = items.into();
        Ok(())
    }

    /// `[window (oldest→newest, zero-padded at the old end) ‖ context]`
    pub fn input_vector(&self, context: &SignalVector) -> Result<SignalVector> {
        if context.dim() != self.context_dim {
            return Err(Error::dims("AR context", self.context_dim, context.dim()));
        }
        let mut x = Vec::with_capacity(self.map.in_dim());
        let missing = self.window_len - self.window.len();
        x.resize(missing * self.input_dim, 0.0);
        for v in &self.window {
            x.extend_from_slice(v.as_slice());
        }
        x.extend_from_slice(context.as_slice());
        Ok(SignalVector::from_vec_unchecked(x))
    }

    pub fn predict(&self, context: &SignalVector) -> Result<SignalVector> {
        audit::scoped(self.tag, || {
            let x = self.input_vector(context)?;
            self.map.forward(&x)
        })
    }

    /// Predict, take one step toward `actual`, then push `actual` into the
    /// window. Returns the loss before the step.
    pub fn observe(&mut self, context: &SignalVector, actual: &SignalVector, eta: f64) -> Result<f64> {
        self.observe_with_prediction(context, actual, eta).map(|(loss, _)| loss)
    }

    /// Like [`ArUnit::observe`], also returning the prediction that was scored.
    pub fn observe_with_prediction(
        &mut self,
        context: &SignalVector,
        actual: &SignalVector,
        eta: f64,
    ) -> Result<(f64, SignalVector)> {
        check_eta(eta)?;
        if actual.dim() != self.input_dim {
            return Err(Error::dims("AR observation", self.input_dim, actual.dim()));
        }
        let tag = self.tag;
        let (loss, prediction) = audit::scoped(tag, || {
            let x = self.input_vector(context)?;
            let trace = self.map.forward_raw(x.as_slice());
            let (loss, g) = sq_error(&trace.output, actual.as_slice());
            if loss > 0.0 {
                let bp = self.map.backprop(x.as_slice(), &trace, &g, false);
                self.map.step_backprop(x.as_slice(), &trace, &bp, eta)?;
            }
            let prediction = SignalVector::new(trace.output).map_err(|_| Error::NonFinite("AR prediction"))?;
            Ok::<_, Error>((loss, prediction))
        })?;
        if self.window.len() == self.window_len {
            self.window.pop_front();
        }
        self.window.push_back(actual.clone());
        Ok((loss, prediction))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(w: usize, d: usize, c: usize) -> ArConfig {
        ArConfig {
            window_len: w,
            input_dim: d,
            context_dim: c,
            hidden_dim: None,
            base_lr: 0.05,
        }
    }

    fn sv(v: &[f64]) -> SignalVector {
        SignalVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn empty_context_uses_window_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut u = ArUnit::new(&cfg(2, 2, 0), &mut rng).unwrap();
        u.observe(&SignalVector::zeros(0), &sv(&[1.0, 2.0]), 0.0).unwrap();
        let p = u.predict(&SignalVector::zeros(0)).unwrap();
        let direct = u.map().forward(&sv(&[0.0, 0.0, 1.0, 2.0])).unwrap();
        assert_eq!(p, direct);
    }

    #[test]
    fn fresh_zero_unit_predicts_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut u = ArUnit::new(&cfg(3, 2, 1), &mut rng).unwrap();
        let n = u.map().param_count();
        u.map_mut().set_params(&vec![0.0; n]).unwrap();
        assert_eq!(u.predict(&sv(&[0.4])).unwrap(), SignalVector::zeros(2));
    }

    #[test]
    fn context_dim_checked() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = ArUnit::new(&cfg(3, 2, 1), &mut rng).unwrap();
        assert_eq!(
            u.predict(&SignalVector::zeros(2)).unwrap_err(),
            Error::dims("AR context", 1, 2)
        );
    }

    #[test]
    fn exact_prediction_advances_window_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u = ArUnit::new(&cfg(2, 2, 0), &mut rng).unwrap();
        let ctx = SignalVector::zeros(0);
        let p = u.predict(&ctx).unwrap();
        let before = u.map().params();
        let loss = u.observe(&ctx, &p, 0.3).unwrap();
        assert_eq!(loss, 0.0);
        assert_eq!(u.map().params(), before);
        assert_eq!(u.window().count(), 1);
    }

    #[test]
    fn zero_step_keeps_params_bit_identical() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u = ArUnit::new(&cfg(2, 2, 1), &mut rng).unwrap();
        let before = u.map().params();
        let loss = u.observe(&sv(&[0.5]), &sv(&[1.0, -1.0]), 0.0).unwrap();
        assert!(loss > 0.0);
        assert_eq!(u.map().params(), before);
    }

    #[test]
    fn window_keeps_last_w() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut u = ArUnit::new(&cfg(2, 1, 0), &mut rng).unwrap();
        let ctx = SignalVector::zeros(0);
        for v in [1.0, 2.0, 3.0] {
            u.observe(&ctx, &sv(&[v]), 0.01).unwrap();
        }
        let w: Vec<f64> = u.window().map(|v| v.as_slice()[0]).collect();
        assert_eq!(w, vec![2.0, 3.0]);
    }

    #[test]
    fn learns_constant_sequence() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut u = ArUnit::new(&cfg(4, 3, 0), &mut rng).unwrap();
        let c = sv(&[0.5, -0.3, 0.8]);
        let ctx = SignalVector::zeros(0);
        for _ in 0..500 {
            u.observe(&ctx, &c, 0.05).unwrap();
        }
        let p = u.predict(&ctx).unwrap();
        assert!(p.distance_sq(&c).sqrt() < 0.05);
    }
}
