//! Central finite-difference checks of the AR and AE loss gradients.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::unit::{AeConfig, AeInit, AeUnit, ArConfig, ArUnit, SignalVector};

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckConfig {
    pub instances: usize,
    /// Upper bound on every layer width, including hidden.
    pub max_dim: usize,
    pub step: f64,
    pub seed: u64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        GradCheckConfig {
            instances: 20,
            max_dim: 8,
            step: 1e-5,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GradCheckReport {
    pub ar_errors: Vec<f64>,
    pub ae_errors: Vec<f64>,
}

impl GradCheckReport {
    pub fn ar_max(&self) -> f64 {
        self.ar_errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn ae_max(&self) -> f64 {
        self.ae_errors.iter().copied().fold(0.0, f64::max)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.ar_max().max(self.ae_max())
    }
}

/// `‖a − b‖ / max(‖a‖ + ‖b‖, 1e-12)`
pub fn relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    diff / (na + nb).max(1e-12)
}

/// Central differences of `loss` around `params`.
pub fn numeric_gradient(params: &[f64], step: f64, mut loss: impl FnMut(&[f64]) -> f64) -> Vec<f64> {
    let mut p = params.to_vec();
    (0..p.len())
        .map(|i| {
            let orig = p[i];
            p[i] = orig + step;
            let up = loss(&p);
            p[i] = orig - step;
            let down = loss(&p);
            p[i] = orig;
            (up - down) / (2.0 * step)
        })
        .collect()
}

fn random_vec(rng: &mut ChaCha8Rng, dim: usize) -> SignalVector {
    SignalVector::new((0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect()).expect("finite")
}

/// Scales default init up so tanh units sit in their curved range.
fn scale_params(params: &[f64], rng: &mut ChaCha8Rng) -> Vec<f64> {
    params.iter().map(|p| p * rng.gen_range(3.0..8.0)).collect()
}

/// Relative gradient error of the AR prediction loss on one random instance.
pub fn check_ar_instance(seed: u64, max_dim: usize, step: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_dim = rng.gen_range(1..=(max_dim / 2).max(1));
    let window_len = rng.gen_range(1..=(max_dim / input_dim).min(3)).max(1);
    let context_dim = rng.gen_range(0..=max_dim - window_len * input_dim);
    let hidden = rng.gen_range(2..=max_dim);
    let cfg = ArConfig {
        window_len,
        input_dim,
        context_dim,
        hidden_dim: Some(hidden),
        base_lr: 0.1,
    };
    let mut unit = ArUnit::new(&cfg, &mut rng)?;
    let scaled = scale_params(&unit.map().params(), &mut rng);
    unit.map_mut().set_params(&scaled)?;
    let context = random_vec(&mut rng, context_dim);
    for _ in 0..window_len {
        let v = random_vec(&mut rng, input_dim);
        unit.observe(&context, &v, 0.0)?;
    }
    let target = random_vec(&mut rng, input_dim);
    let x = unit.input_vector(&context)?;
    let (_, grads) = unit.map().loss_gradient(&x, &target)?;
    let mut probe = unit.clone();
    let numeric = numeric_gradient(&unit.map().params(), step, |p| {
        probe.map_mut().set_params(p).expect("finite params");
        let y = probe.predict(&context).expect("dims");
        0.5 * y.distance_sq(&target)
    });
    Ok(relative_error(&grads.flat(), &numeric))
}

/// Relative gradient error of the AE reconstruction loss on one random
/// instance, over encoder and decoder parameters jointly.
pub fn check_ae_instance(seed: u64, max_dim: usize, step: f64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let input_dim = rng.gen_range(1..=(max_dim / 2).max(1));
    let k = rng.gen_range(1..=(max_dim / input_dim)).max(1);
    let summary_dim = rng.gen_range(1..=max_dim);
    let hidden = rng.gen_range(2..=max_dim);
    let cfg = AeConfig {
        k,
        input_dim,
        summary_dim,
        hidden_dim: Some(hidden),
        base_lr: 0.1,
        init: AeInit::Uniform,
    };
    let mut unit = AeUnit::new(&cfg, &mut rng)?;
    let enc = scale_params(&unit.encoder().params(), &mut rng);
    let dec = scale_params(&unit.decoder().params(), &mut rng);
    unit.encoder_mut().set_params(&enc)?;
    unit.decoder_mut().set_params(&dec)?;
    let inputs: Vec<SignalVector> = (0..k).map(|_| random_vec(&mut rng, input_dim)).collect();
    let (_, eg, dg) = unit.loss_gradient(&inputs)?;
    let mut analytic = eg.flat();
    analytic.extend(dg.flat());
    let split = enc.len();
    let mut all = enc.clone();
    all.extend_from_slice(&dec);
    let mut probe = unit.clone();
    let numeric = numeric_gradient(&all, step, |p| {
        probe.encoder_mut().set_params(&p[..split]).expect("finite");
        probe.decoder_mut().set_params(&p[split..]).expect("finite");
        let s = probe.summarize(&inputs).expect("dims");
        let r = probe.reconstruct(&s).expect("dims");
        0.5 * r.iter().zip(&inputs).map(|(a, b)| a.distance_sq(b)).sum::<f64>()
    });
    Ok(relative_error(&analytic, &numeric))
}

pub fn run(cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut ar_errors = Vec::with_capacity(cfg.instances);
    let mut ae_errors = Vec::with_capacity(cfg.instances);
    for i in 0..cfg.instances as u64 {
        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add(i);
        ar_errors.push(check_ar_instance(seed, cfg.max_dim, cfg.step)?);
        ae_errors.push(check_ae_instance(seed, cfg.max_dim, cfg.step)?);
    }
    Ok(GradCheckReport { ar_errors, ae_errors })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_basics() {
        assert_eq!(relative_error(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(relative_error(&[0.0], &[0.0]), 0.0);
        assert!((relative_error(&[1.0], &[-1.0]) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn numeric_gradient_of_quadratic() {
        let g = numeric_gradient(&[1.0, -2.0], 1e-5, |p| p[0] * p[0] + 3.0 * p[1]);
        assert!((g[0] - 2.0).abs() < 1e-8);
        assert!((g[1] - 3.0).abs() < 1e-8);
    }

    #[test]
    fn default_suite_within_tolerance() {
        let rep = run(&GradCheckConfig::default()).unwrap();
        assert_eq!(rep.ar_errors.len(), 20);
        assert!(rep.max_rel_error() <= 1e-4, "{rep:?}");
    }
}
