use rand::Rng;

use super::audit::{self, UnitTag};
use super::map::{check_eta, default_hidden, sq_error, MapGradients, TrainableMap};
use super::signal::SignalVector;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum AeInit {
    /// Uniform weights in `[-0.1, 0.1]`.
    #[default]
    Uniform,
    /// Encoder and decoder start near the identity, with first-layer gain
    /// `scale` (see [`TrainableMap::near_identity`]). Requires `k = 1` and
    /// `input_dim == summary_dim`.
    NearIdentity { scale: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct AeConfig {
    pub k: usize,
    pub input_dim: usize,
    pub summary_dim: usize,
    pub hidden_dim: Option<usize>,
    pub base_lr: f64,
    pub init: AeInit,
}

/// Conventional small scale, where the map is linear to within the noise,
/// and the noise used by [`AeInit::NearIdentity`].
pub const IDENTITY_SCALE: f64 = 0.01;
pub const IDENTITY_NOISE: f64 = 1e-3;

/// Autoencoder that summarizes `k` consecutive inputs into one vector.
#[derive(Debug, Clone, PartialEq)]
pub struct AeUnit {
    k: usize,
    input_dim: usize,
    summary_dim: usize,
    encoder: TrainableMap,
    decoder: TrainableMap,
    base_lr: f64,
    tag: UnitTag,
}

impl AeUnit {
    pub fn new<R: Rng + ?Sized>(cfg: &AeConfig, rng: &mut R) -> Result<Self> {
        if cfg.k == 0 || cfg.input_dim == 0 || cfg.summary_dim == 0 {
            return Err(Error::contract("AE k, input_dim and summary_dim must be positive"));
        }
        if !(cfg.base_lr > 0.0 && cfg.base_lr.is_finite()) {
            return Err(Error::contract("AE base_lr must be positive"));
        }
        let flat = cfg.k * cfg.input_dim;
        let tag = UnitTag::fresh();
        let (encoder, decoder) = match cfg.init {
            AeInit::Uniform => {
                let eh = cfg.hidden_dim.unwrap_or_else(|| default_hidden(flat, cfg.summary_dim));
                let dh = cfg.hidden_dim.unwrap_or_else(|| default_hidden(cfg.summary_dim, flat));
                let e = TrainableMap::random(flat, eh, cfg.summary_dim, tag, rng);
                let d = TrainableMap::random(cfg.summary_dim, dh, flat, tag, rng);
                (e, d)
            }
            AeInit::NearIdentity { scale } => {
                if !(scale > 0.0 && scale.is_finite()) {
                    return Err(Error::Config(format!("identity scale must be positive, got {scale}")));
                }
                if cfg.k != 1 || cfg.input_dim != cfg.summary_dim {
                    return Err(Error::contract("near-identity AE init needs k = 1 and input_dim == summary_dim"));
                }
                let h = cfg.hidden_dim.unwrap_or_else(|| default_hidden(flat, flat));
                let e = TrainableMap::near_identity(flat, h, scale, IDENTITY_NOISE, tag, rng);
                let d = TrainableMap::near_identity(flat, h, scale, IDENTITY_NOISE, tag, rng);
                (e, d)
            }
        };
        Ok(AeUnit {
            k: cfg.k,
            input_dim: cfg.input_dim,
            summary_dim: cfg.summary_dim,
            encoder,
            decoder,
            base_lr: cfg.base_lr,
            tag,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn summary_dim(&self) -> usize {
        self.summary_dim
    }

    pub fn base_lr(&self) -> f64 {
        self.base_lr
    }

    pub fn tag(&self) -> UnitTag {
        self.tag
    }

    pub fn encoder(&self) -> &TrainableMap {
        &self.encoder
    }

    pub fn decoder(&self) -> &TrainableMap {
        &self.decoder
    }

    pub fn encoder_mut(&mut self) -> &mut TrainableMap {
        &mut self.encoder
    }

    pub fn decoder_mut(&mut self) -> &mut TrainableMap {
        &mut self.decoder
    }

    fn flatten(&self, inputs: &[SignalVector]) -> Result<SignalVector> {
        if inputs.len() != self.k {
            return Err(Error::dims("AE input count", self.k, inputs.len()));
        }
        if let Some(bad) = inputs.iter().find(|v| v.dim() != self.input_dim) {
            return Err(Error::dims("AE input", self.input_dim, bad.dim()));
        }
        Ok(SignalVector::concat(inputs))
    }

    pub fn summarize(&self, inputs: &[SignalVector]) -> Result<SignalVector> {
        audit::scoped(self.tag, || {
            let x = self.flatten(inputs)?;
            self.encoder.forward(&x)
        })
    }

    pub fn reconstruct(&self, summary: &SignalVector) -> Result<Vec<SignalVector>> {
        if summary.dim() != self.summary_dim {
            return Err(Error::dims("AE summary", self.summary_dim, summary.dim()));
        }
        audit::scoped(self.tag, || Ok(self.decoder.forward(summary)?.split(self.k)))
    }

    /// Reconstruction loss and the gradients of encoder and decoder.
    pub fn loss_gradient(&self, inputs: &[SignalVector]) -> Result<(f64, MapGradients, MapGradients)> {
        self.loss_gradient_full(inputs).map(|(l, e, d, _)| (l, e, d))
    }

    fn loss_gradient_full(&self, inputs: &[SignalVector]) -> Result<(f64, MapGradients, MapGradients, Vec<f64>)> {
        audit::scoped(self.tag, || {
            let x = self.flatten(inputs)?;
            let enc = self.encoder.forward_raw(x.as_slice());
            let dec = self.decoder.forward_raw(&enc.output);
            let (loss, g) = sq_error(&dec.output, x.as_slice());
            let (dec_grads, d_summary) = self.decoder.backward(&enc.output, &dec, &g);
            let (enc_grads, _) = self.encoder.backward(x.as_slice(), &enc, &d_summary);
            Ok((loss, enc_grads, dec_grads, dec.output))
        })
    }

    /// One gradient step on `0.5·‖inputs − decode(encode(inputs))‖²` through
    /// both halves. Returns the loss before the step.
    pub fn update(&mut self, inputs: &[SignalVector], eta: f64) -> Result<f64> {
        self.update_with_reconstruction(inputs, eta).map(|(loss, _)| loss)
    }

    /// Like [`AeUnit::update`], also returning the pre-step reconstruction.
    pub fn update_with_reconstruction(&mut self, inputs: &[SignalVector], eta: f64) -> Result<(f64, Vec<SignalVector>)> {
        check_eta(eta)?;
        let tag = self.tag;
        audit::scoped(tag, || {
            let x = self.flatten(inputs)?;
            let enc = self.encoder.forward_raw(x.as_slice());
            let dec = self.decoder.forward_raw(&enc.output);
            let (loss, g) = sq_error(&dec.output, x.as_slice());
            let dec_bp = self.decoder.backprop(&enc.output, &dec, &g, true);
            let enc_bp = self.encoder.backprop(x.as_slice(), &enc, &dec_bp.dx, false);
            let recon = SignalVector::new(dec.output.clone())
                .map_err(|_| Error::NonFinite("AE reconstruction"))?
                .split(self.k);
            // Both halves must accept the step or neither changes.
            self.encoder.check_backprop(&enc_bp, eta)?;
            self.decoder.check_backprop(&dec_bp, eta)?;
            self.encoder.step_backprop(x.as_slice(), &enc, &enc_bp, eta)?;
            self.decoder.step_backprop(&enc.output, &dec, &dec_bp, eta)?;
            Ok((loss, recon))
        })
    }
}
