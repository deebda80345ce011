//! Single-hidden-layer map `y = W2·tanh(W1·x + b1) + b2` with closed-form
//! gradients.

use rand::Rng;

use super::audit::{self, UnitTag};
use super::signal::SignalVector;
use crate::error::{Error, Result};

/// Init half-width for uniform weight initialization.
pub const INIT_SCALE: f64 = 0.1;

/// Default hidden width for a map with the given input and output sizes.
pub fn default_hidden(in_dim: usize, out_dim: usize) -> usize {
    2 * in_dim.max(out_dim)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainableMap {
    in_dim: usize,
    hidden_dim: usize,
    out_dim: usize,
    w1: Vec<f64>,
    b1: Vec<f64>,
    w2: Vec<f64>,
    b2: Vec<f64>,
    owner: UnitTag,
}

/// Gradients laid out like the parameters (W1 row-major, b1, W2 row-major, b2).
#[derive(Debug, Clone, PartialEq)]
pub struct MapGradients {
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

impl MapGradients {
    pub fn flat(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        v
    }
}

/// Intermediate values of one forward pass, kept for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// Hidden-layer error signal of one backward pass; weight gradients are
/// formed on the fly when the step is applied.
#[derive(Debug, Clone)]
pub(crate) struct Backprop {
    grad_out: Vec<f64>,
    da: Vec<f64>,
    pub dx: Vec<f64>,
    gmax: f64,
}

impl TrainableMap {
    pub fn zeros(in_dim: usize, hidden_dim: usize, out_dim: usize, owner: UnitTag) -> Self {
        assert!(in_dim > 0 && hidden_dim > 0 && out_dim > 0, "map dims must be positive");
        TrainableMap {
            in_dim,
            hidden_dim,
            out_dim,
            w1: vec![0.0; hidden_dim * in_dim],
            b1: vec![0.0; hidden_dim],
            w2: vec![0.0; out_dim * hidden_dim],
            b2: vec![0.0; out_dim],
            owner,
        }
    }

    /// Weights and biases uniform in `[-INIT_SCALE, INIT_SCALE]`.
    pub fn random<R: Rng + ?Sized>(
        in_dim: usize,
        hidden_dim: usize,
        out_dim: usize,
        owner: UnitTag,
        rng: &mut R,
    ) -> Self {
        let mut m = Self::zeros(in_dim, hidden_dim, out_dim, owner);
        for p in m.params_mut() {
            *p = rng.gen_range(-INIT_SCALE..=INIT_SCALE);
        }
        m
    }

    /// Near-identity map for `in_dim == out_dim <= hidden_dim`:
    /// `W1 = s(I + N1)`, `W2 = (I + N2)/s`, zero biases, with `N` uniform in
    /// `[-noise, noise]`. For small `s` the output is `(I + N2)(I + N1)x` up to
    /// an `O(s²|x|³)` tanh term.
    pub fn near_identity<R: Rng + ?Sized>(
        dim: usize,
        hidden_dim: usize,
        scale: f64,
        noise: f64,
        owner: UnitTag,
        rng: &mut R,
    ) -> Self {
        assert!(hidden_dim >= dim, "hidden width must cover the identity");
        let mut m = Self::zeros(dim, hidden_dim, dim, owner);
        for h in 0..hidden_dim {
            for i in 0..dim {
                let eye = if h == i { 1.0 } else { 0.0 };
                m.w1[h * dim + i] = scale * (eye + rng.gen_range(-noise..=noise));
            }
        }
        for o in 0..dim {
            for h in 0..hidden_dim {
                let eye = if h == o { 1.0 } else { 0.0 };
                m.w2[o * hidden_dim + h] = (eye + rng.gen_range(-noise..=noise)) / scale;
            }
        }
        m
    }

    pub fn in_dim(&self) -> usize {
        self.in_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.hidden_dim
    }

    pub fn out_dim(&self) -> usize {
        self.out_dim
    }

    pub fn owner(&self) -> UnitTag {
        self.owner
    }

    pub fn param_count(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    /// Parameters in declared order: W1, b1, W2, b2.
    pub fn params(&self) -> Vec<f64> {
        audit::touch(self.owner);
        let mut v = Vec::with_capacity(self.param_count());
        v.extend_from_slice(&self.w1);
        v.extend_from_slice(&self.b1);
        v.extend_from_slice(&self.w2);
        v.extend_from_slice(&self.b2);
        v
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        audit::touch(self.owner);
        if flat.len() != self.param_count() {
            return Err(Error::dims("parameter vector", self.param_count(), flat.len()));
        }
        if flat.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("parameter vector"));
        }
        let mut it = flat.iter().copied();
        for p in self.params_mut() {
            *p = it.next().unwrap_or_default();
        }
        Ok(())
    }

    fn params_mut(&mut self) -> impl Iterator<Item = &mut f64> {
        self.w1
            .iter_mut()
            .chain(self.b1.iter_mut())
            .chain(self.w2.iter_mut())
            .chain(self.b2.iter_mut())
    }

    pub(crate) fn check_input(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.in_dim {
            return Err(Error::dims("map input", self.in_dim, x.len()));
        }
        Ok(())
    }

    pub fn forward(&self, x: &SignalVector) -> Result<SignalVector> {
        self.check_input(x.as_slice())?;
        let trace = self.forward_raw(x.as_slice());
        SignalVector::new(trace.output).map_err(|_| Error::NonFinite("map output"))
    }

    pub(crate) fn forward_raw(&self, x: &[f64]) -> ForwardTrace {
        audit::touch(self.owner);
        let mut hidden = self.b1.clone();
        for (h, row) in hidden.iter_mut().zip(self.w1.chunks_exact(self.in_dim)) {
            *h = (*h + dot(row, x)).tanh();
        }
        let mut output = self.b2.clone();
        for (o, row) in output.iter_mut().zip(self.w2.chunks_exact(self.hidden_dim)) {
            *o += dot(row, &hidden);
        }
        ForwardTrace { hidden, output }
    }

    /// Backpropagates `grad_out = dL/dy` through one forward pass.
    /// Returns parameter gradients and `dL/dx`.
    pub(crate) fn backward(&self, x: &[f64], trace: &ForwardTrace, grad_out: &[f64]) -> (MapGradients, Vec<f64>) {
        audit::touch(self.owner);
        let (ind, hd) = (self.in_dim, self.hidden_dim);
        let mut w2 = vec![0.0; self.w2.len()];
        let mut dh = vec![0.0; hd];
        for (o, &g) in grad_out.iter().enumerate() {
            let row = &self.w2[o * hd..(o + 1) * hd];
            let grow = &mut w2[o * hd..(o + 1) * hd];
            for h in 0..hd {
                grow[h] = g * trace.hidden[h];
                dh[h] += row[h] * g;
            }
        }
        let da: Vec<f64> = dh
            .iter()
            .zip(&trace.hidden)
            .map(|(d, h)| d * (1.0 - h * h))
            .collect();
        let mut w1 = vec![0.0; self.w1.len()];
        let mut dx = vec![0.0; ind];
        for (h, &a) in da.iter().enumerate() {
            let row = &self.w1[h * ind..(h + 1) * ind];
            let grow = &mut w1[h * ind..(h + 1) * ind];
            for i in 0..ind {
                grow[i] = a * x[i];
                dx[i] += row[i] * a;
            }
        }
        (
            MapGradients {
                w1,
                b1: da,
                w2,
                b2: grad_out.to_vec(),
            },
            dx,
        )
    }

    /// Backpropagates to the hidden pre-activations without materializing
    /// weight gradients. `dx` is filled only when `want_dx` is set.
    pub(crate) fn backprop(&self, x: &[f64], trace: &ForwardTrace, grad_out: &[f64], want_dx: bool) -> Backprop {
        audit::touch(self.owner);
        let (ind, hd) = (self.in_dim, self.hidden_dim);
        let mut dh = vec![0.0; hd];
        for (o, &g) in grad_out.iter().enumerate() {
            let row = &self.w2[o * hd..(o + 1) * hd];
            for h in 0..hd {
                dh[h] += row[h] * g;
            }
        }
        let da: Vec<f64> = dh
            .iter()
            .zip(&trace.hidden)
            .map(|(d, h)| d * (1.0 - h * h))
            .collect();
        let mut dx = Vec::new();
        if want_dx {
            dx = vec![0.0; ind];
            for (h, &a) in da.iter().enumerate() {
                let row = &self.w1[h * ind..(h + 1) * ind];
                for i in 0..ind {
                    dx[i] += row[i] * a;
                }
            }
        }
        // Weight gradients are outer products, so their largest magnitude is
        // the product of the factors' largest magnitudes.
        let amax = |v: &[f64]| v.iter().fold(0.0_f64, |m, g| if g.is_nan() || m.is_nan() { f64::NAN } else { m.max(g.abs()) });
        let (gm, am) = (amax(grad_out), amax(&da));
        let gmax = amax(&[gm * amax(&trace.hidden), gm, am * amax(x), am]);
        Backprop {
            grad_out: grad_out.to_vec(),
            da,
            dx,
            gmax,
        }
    }

    pub(crate) fn check_backprop(&self, bp: &Backprop, eta: f64) -> Result<()> {
        let pmax = self
            .w1
            .iter()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain(&self.b2)
            .fold(0.0_f64, |m, p| m.max(p.abs()));
        if !bp.gmax.is_finite() || !(pmax + eta * bp.gmax).is_finite() {
            return Err(Error::NonFinite("gradient"));
        }
        Ok(())
    }

    /// Same arithmetic as `apply(backward(..))`, done in place.
    pub(crate) fn step_backprop(&mut self, x: &[f64], trace: &ForwardTrace, bp: &Backprop, eta: f64) -> Result<()> {
        audit::touch(self.owner);
        self.check_backprop(bp, eta)?;
        if eta == 0.0 {
            return Ok(());
        }
        let (ind, hd) = (self.in_dim, self.hidden_dim);
        let a = -eta;
        for (o, &g) in bp.grad_out.iter().enumerate() {
            let row = &mut self.w2[o * hd..(o + 1) * hd];
            for h in 0..hd {
                row[h] += a * (g * trace.hidden[h]);
            }
        }
        for (h, &d) in bp.da.iter().enumerate() {
            let row = &mut self.w1[h * ind..(h + 1) * ind];
            for i in 0..ind {
                row[i] += a * (d * x[i]);
            }
        }
        axpy(&mut self.b1, a, &bp.da);
        axpy(&mut self.b2, a, &bp.grad_out);
        Ok(())
    }

    /// Gradient of `0.5·‖target − forward(x)‖²` with respect to the parameters.
    pub fn loss_gradient(&self, x: &SignalVector, target: &SignalVector) -> Result<(f64, MapGradients)> {
        self.check_input(x.as_slice())?;
        if target.dim() != self.out_dim {
            return Err(Error::dims("map target", self.out_dim, target.dim()));
        }
        let trace = self.forward_raw(x.as_slice());
        let (loss, g) = sq_error(&trace.output, target.as_slice());
        let (grads, _) = self.backward(x.as_slice(), &trace, &g);
        Ok((loss, grads))
    }

    /// One gradient-descent step on `0.5·‖target − forward(x)‖²`.
    /// Returns the loss before the step.
    pub fn update(&mut self, x: &SignalVector, target: &SignalVector, eta: f64) -> Result<f64> {
        check_eta(eta)?;
        self.check_input(x.as_slice())?;
        if target.dim() != self.out_dim {
            return Err(Error::dims("map target", self.out_dim, target.dim()));
        }
        let trace = self.forward_raw(x.as_slice());
        let (loss, g) = sq_error(&trace.output, target.as_slice());
        let bp = self.backprop(x.as_slice(), &trace, &g, false);
        self.step_backprop(x.as_slice(), &trace, &bp, eta)?;
        Ok(loss)
    }
}

pub(crate) fn check_eta(eta: f64) -> Result<()> {
    if !eta.is_finite() || eta < 0.0 {
        return Err(Error::contract(format!("step size must be finite and nonnegative, got {eta}")));
    }
    Ok(())
}

/// `(0.5·‖y − t‖², y − t)`
pub(crate) fn sq_error(y: &[f64], t: &[f64]) -> (f64, Vec<f64>) {
    let g: Vec<f64> = y.iter().zip(t).map(|(a, b)| a - b).collect();
    (0.5 * g.iter().map(|v| v * v).sum::<f64>(), g)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}
