use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use splx::dynamics::{
    band_recruitment_time, crossover_rank, head_matched_time, loss, matched_loss_time, one_layer_state,
    smooth_act_eigenvalues, tail_alpha, two_layer_state, HeadAnchor, Mode, OneLayerConfig, SmoothSpectrumConfig,
    TwoLayerConfig, TwoLayerMode,
};
use splx::verify::three_zone_cell;

/// Classical RK4 for a scalar autonomous `ẏ = f(y)`.
fn rk4_scalar(f: impl Fn(f64) -> f64, y0: f64, t: f64, steps: usize) -> f64 {
    let h = t / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(y);
        let k2 = f(y + 0.5 * h * k1);
        let k3 = f(y + 0.5 * h * k2);
        let k4 = f(y + h * k3);
        y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    y
}

#[test]
fn one_layer_matches_scalar_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..10 {
        let modes: Vec<Mode> = (0..4)
            .map(|_| Mode {
                beta: rng.gen_range(-2.0..2.0),
                kappa: rng.gen_range(0.1..2.0),
                a0: rng.gen_range(-1.0..1.0),
            })
            .collect();
        let cfg = OneLayerConfig::new(modes.clone()).unwrap();
        let t = 10.0 / cfg.min_kappa();
        let exact = one_layer_state(&cfg, t).unwrap();
        for (m, e) in modes.iter().zip(&exact) {
            let num = rk4_scalar(|a| -m.kappa * (a - m.beta), m.a0, t, 20_000);
            assert!((num - e).abs() < 1e-9, "{num} vs {e}");
        }
    }
}

#[test]
fn two_layer_matches_scalar_rk4() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..10 {
        let modes: Vec<TwoLayerMode> = (0..4)
            .map(|k| TwoLayerMode {
                beta: if k == 3 { 0.0 } else { rng.gen_range(0.2..2.0) },
                m0: rng.gen_range(1e-3..0.1),
            })
            .collect();
        let cfg = TwoLayerConfig::new(modes.clone()).unwrap();
        for t in [0.5, 2.0, 8.0] {
            let exact = two_layer_state(&cfg, t).unwrap();
            for (m, e) in modes.iter().zip(&exact) {
                let num = rk4_scalar(|x| 2.0 * x * (m.beta - x), m.m0, t, 20_000);
                assert!((num - e).abs() < 1e-9, "{num} vs {e}");
            }
        }
    }
}

#[test]
fn three_zone_at_unit_q() {
    for p in [0.5, 1.0] {
        let (head, tail) = three_zone_cell(p, 1.0).unwrap();
        assert!((head - p).abs() <= 0.05 * p, "head {head}");
        assert!((tail - (p + 2.0)).abs() <= 0.05 * (p + 2.0), "tail {tail}");
    }
}

#[test]
fn matched_loss_time_recovers_level() {
    let cfg = OneLayerConfig::from_rates(&[1.0, 0.5, 0.2], &[2.0, 0.7, 0.1]).unwrap();
    let l0 = loss(&cfg, 0.0).unwrap();
    for f in [0.9, 0.5, 0.1] {
        let t = matched_loss_time(&cfg, f * l0).unwrap();
        assert!((loss(&cfg, t).unwrap() - f * l0).abs() < 1e-10 * l0);
    }
}

proptest! {
    #[test]
    fn spectrum_entries_bounded_by_teacher(p in 0.1f64..3.0, q in 0.0f64..2.0, eta in 0.1f64..5.0, t in 0.0f64..100.0) {
        let cfg = SmoothSpectrumConfig::new(1.0, p, eta, q, 64).unwrap();
        let lam = smooth_act_eigenvalues(&cfg, t).unwrap();
        for (r, l) in lam.iter().enumerate() {
            prop_assert!(*l >= 0.0 && *l <= ((r + 1) as f64).powf(-p) * (1.0 + 1e-15));
        }
        prop_assert_eq!(tail_alpha(&cfg), p + 2.0 * q);
    }

    #[test]
    fn crossover_rank_inverts_rate(q in 0.1f64..2.0, eta in 0.1f64..5.0, r in 1.0f64..1000.0) {
        let cfg = SmoothSpectrumConfig::new(1.0, 1.0, eta, q, 10).unwrap();
        let t = r.powf(q) / eta;
        prop_assert!((crossover_rank(&cfg, t).unwrap() - r).abs() < 1e-10 * r);
    }

    #[test]
    fn recruitment_time_reaches_target_exactly(eta in 0.1f64..10.0, q in 0.0f64..2.0, cutoff in 1usize..500, delta in 0.001f64..0.9) {
        let cfg = SmoothSpectrumConfig::new(1.0, 1.0, eta, q, cutoff).unwrap();
        let t = band_recruitment_time(&cfg, cutoff, delta).unwrap();
        let slowest = -(-cfg.rate(cutoff) * t).exp_m1();
        prop_assert!((slowest - (1.0 - delta)).abs() < 1e-12);
        let cfg2 = SmoothSpectrumConfig::new(1.0, 1.0, eta, q, cutoff + 1).unwrap();
        prop_assert!(band_recruitment_time(&cfg2, cutoff + 1, delta).unwrap() >= t);
    }

    #[test]
    fn head_matched_time_increases_in_q(q1 in 0.0f64..2.0, dq in 1e-3f64..1.0, ratio in 2usize..32, xi in 0.05f64..0.95) {
        let anchor = HeadAnchor::new(5, xi, 1.0).unwrap();
        let a = head_matched_time(q1, &anchor, 5 * ratio, 0.05).unwrap();
        let b = head_matched_time(q1 + dq, &anchor, 5 * ratio, 0.05).unwrap();
        prop_assert!(a < b);
    }
}
