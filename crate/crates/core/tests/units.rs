use mhpm::unit::{AeConfig, AeInit, AeUnit, ArConfig, ArUnit, SignalVector, TrainableMap, UnitTag};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn sv(v: &[f64]) -> SignalVector {
    SignalVector::new(v.to_vec()).unwrap()
}

/// Straight-line evaluation of `W2·tanh(W1·x + b1) + b2` from the flat
/// parameter vector.
fn eval_flat(p: &[f64], n_in: usize, n_hid: usize, n_out: usize, x: &[f64]) -> Vec<f64> {
    let w1 = &p[..n_hid * n_in];
    let b1 = &p[n_hid * n_in..n_hid * n_in + n_hid];
    let w2 = &p[n_hid * n_in + n_hid..n_hid * n_in + n_hid + n_out * n_hid];
    let b2 = &p[n_hid * n_in + n_hid + n_out * n_hid..];
    let mut h = vec![0.0; n_hid];
    for j in 0..n_hid {
        let mut a = b1[j];
        for i in 0..n_in {
            a += w1[j * n_in + i] * x[i];
        }
        h[j] = a.tanh();
    }
    let mut y = vec![0.0; n_out];
    for o in 0..n_out {
        let mut a = b2[o];
        for j in 0..n_hid {
            a += w2[o * n_hid + j] * h[j];
        }
        y[o] = a;
    }
    y
}

#[test]
fn forward_matches_straight_line_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    let m = TrainableMap::random(3, 4, 2, UnitTag::fresh(), &mut rng);
    let x = [1.0, 0.0, 0.0];
    let want = eval_flat(&m.params(), 3, 4, 2, &x);
    let got = m.forward(&sv(&x)).unwrap();
    for (g, w) in got.as_slice().iter().zip(&want) {
        assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()), "{g} vs {w}");
    }
}

#[test]
fn ae_summary_matches_straight_line_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let cfg = AeConfig {
        k: 2,
        input_dim: 3,
        summary_dim: 2,
        hidden_dim: Some(5),
        base_lr: 0.05,
        init: AeInit::Uniform,
    };
    let ae = AeUnit::new(&cfg, &mut rng).unwrap();
    let inputs = vec![sv(&[0.2, -0.4, 1.0]), sv(&[0.0, 0.7, -0.3])];
    let flat: Vec<f64> = inputs.iter().flat_map(|v| v.as_slice().to_vec()).collect();
    let want = eval_flat(&ae.encoder().params(), 6, 5, 2, &flat);
    let got = ae.summarize(&inputs).unwrap();
    for (g, w) in got.as_slice().iter().zip(&want) {
        assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
    }
    let recon = eval_flat(&ae.decoder().params(), 2, 5, 6, got.as_slice());
    let back: Vec<f64> = ae.reconstruct(&got).unwrap().iter().flat_map(|v| v.as_slice().to_vec()).collect();
    for (g, w) in back.iter().zip(&recon) {
        assert!((g - w).abs() <= 1e-12 * (1.0 + w.abs()));
    }
}

#[test]
fn ae_round_trip_improves_with_training() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let cfg = AeConfig {
        k: 4,
        input_dim: 8,
        summary_dim: 4,
        hidden_dim: None,
        base_lr: 0.05,
        init: AeInit::Uniform,
    };
    let mut ae = AeUnit::new(&cfg, &mut rng).unwrap();
    let x: Vec<SignalVector> = (0..4)
        .map(|_| SignalVector::new((0..8).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let err = |ae: &AeUnit| -> f64 {
        let r = ae.reconstruct(&ae.summarize(&x).unwrap()).unwrap();
        r.iter().zip(&x).map(|(a, b)| a.distance_sq(b)).sum()
    };
    let before = err(&ae);
    let first = ae.update(&x, 0.05).unwrap();
    let mut last = first;
    for _ in 1..1000 {
        last = ae.update(&x, 0.05).unwrap();
    }
    assert!(last < 0.1 * first, "first {first}, last {last}");
    assert!(err(&ae) < before);
}

fn period_two_losses(seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let a = SignalVector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let b = SignalVector::new((0..3).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap();
    let cfg = ArConfig {
        window_len: 2,
        input_dim: 3,
        context_dim: 0,
        hidden_dim: None,
        base_lr: 0.05,
    };
    let mut ar = ArUnit::new(&cfg, &mut rng).unwrap();
    let ctx = SignalVector::zeros(0);
    let losses: Vec<f64> = (0..1000)
        .map(|t| ar.observe(&ctx, if t % 2 == 0 { &a } else { &b }, 0.05).unwrap())
        .collect();
    let first: f64 = losses[..100].iter().sum();
    let last: f64 = losses[losses.len() - 100..].iter().sum();
    (first, last)
}

#[test]
fn ar_learns_period_two_sequence() {
    let mut wins = 0;
    for seed in 1..=5 {
        let (first, last) = period_two_losses(seed);
        wins += (last < first) as usize;
    }
    assert!(wins >= 3, "period-2 loss fell on only {wins} of 5 seeds");
}

#[test]
fn ar_constant_sequence_converges() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let cfg = ArConfig {
        window_len: 2,
        input_dim: 3,
        context_dim: 2,
        hidden_dim: None,
        base_lr: 0.05,
    };
    let mut ar = ArUnit::new(&cfg, &mut rng).unwrap();
    let c = sv(&[0.5, -0.25, 0.75]);
    let ctx = sv(&[0.1, -0.1]);
    for _ in 0..500 {
        ar.observe(&ctx, &c, 0.05).unwrap();
    }
    assert!(ar.predict(&ctx).unwrap().distance_sq(&c).sqrt() < 0.05);
}
