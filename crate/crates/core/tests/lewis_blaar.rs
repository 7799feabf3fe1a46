use blaar_core::{
    blaar_run, dual_exponent, theorem1_bound, DualVector64, GameConfig64, LewisBasis64, LewisOptions, MeasureSpace64,
    SemiOnlineGame64, Signal64,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::sync::Arc;

/// `t` signals spanning at most `rank` directions on `m` weighted points,
/// clipped to unit `L_p` norm.
fn low_rank_signals(rng: &mut ChaCha8Rng, m: usize, t: usize, rank: usize, p: f64) -> Vec<Signal64> {
    let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.05..1.0)).collect();
    let space = Arc::new(MeasureSpace64::new(weights).unwrap());
    let bases: Vec<Vec<f64>> = (0..rank).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (0..t)
        .map(|_| {
            let c: Vec<f64> = (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect();
            let v = (0..m).map(|k| (0..rank).map(|i| c[i] * bases[i][k]).sum()).collect();
            let s = Signal64::new(v, space.clone()).unwrap();
            let norm = s.lp_norm(p).unwrap();
            if norm > 1.0 {
                s.scaled(1.0 / norm)
            } else {
                s
            }
        })
        .collect()
}

#[test]
fn nearly_collinear_signals_still_converge() {
    let space = Arc::new(MeasureSpace64::uniform(16, 1.0 / 16.0).unwrap());
    let a: Vec<f64> = (0..16).map(|k| (0.7 * k as f64).sin()).collect();
    let b: Vec<f64> = (0..16).map(|k| a[k] + 1e-5 * (1.3 * k as f64).cos()).collect();
    let signals = vec![Signal64::new(a, space.clone()).unwrap(), Signal64::new(b, space).unwrap()];
    for &p in &[1.5, 3.0, 4.0] {
        let basis = LewisBasis64::build(&signals, p, &LewisOptions::default()).unwrap();
        assert_eq!(basis.rank(), 2);
        assert!(basis.biorthogonality_residual() < 1e-8, "p = {p}");
    }
}

#[test]
fn lewis_sweep_invariants() {
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        for seed in 0..12u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let m = rng.random_range(2..=32);
            let rank = rng.random_range(1..=6usize.min(m));
            let t = rank + rng.random_range(0..10);
            let signals = low_rank_signals(&mut rng, m, t, rank, p);
            let basis = LewisBasis64::build(&signals, p, &LewisOptions::default()).unwrap();
            let n = basis.rank() as f64;
            assert!(basis.biorthogonality_residual() <= 1e-6, "p={p} seed={seed}");

            let a = basis.blaar_kernel().into_entries();
            let b = basis.integral_kernel().into_entries();
            assert!((&a - &b).amax() <= 1e-6 * (1.0 + a.amax()), "p={p} seed={seed}");

            let k = basis.normalized_kernel().into_entries();
            let kappa = (0.5 - 1.0 / p).abs();
            assert!(basis.operator_scale() <= n.powf(kappa) * (1.0 + 1e-6));
            for (s, x) in signals.iter().enumerate() {
                let norm = x.lp_norm(p).unwrap();
                assert!(k[(s, s)] <= norm * norm * (1.0 + 1e-8), "p={p} seed={seed} s={s}");
                let r = k[(s, s)].sqrt();
                if norm > 1e-9 {
                    assert!(norm / r <= n.powf(kappa) * (1.0 + 1e-6));
                }
            }
        }
    }
}

#[test]
fn quadratic_case_is_the_plain_gram() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let signals = low_rank_signals(&mut rng, 10, 14, 4, 2.0);
    let basis = LewisBasis64::build(&signals, 2.0, &LewisOptions::default()).unwrap();
    let mu = signals[0].space().weights().to_vec();
    let k = basis.normalized_kernel().into_entries();
    for (s, x) in signals.iter().enumerate() {
        for (l, y) in signals.iter().enumerate() {
            let g: f64 = (0..10).map(|i| mu[i] * x.values()[i] * y.values()[i]).sum();
            assert!((k[(s, l)] - g).abs() <= 1e-9, "({s}, {l})");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn lattice_bound_holds(seed in 0u64..1_000_000, p_index in 0usize..4, noise in 0.0f64..0.3) {
        let p = [1.5, 2.0, 3.0, 4.0][p_index];
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let m = rng.random_range(3..20);
        let t = rng.random_range(2..60);
        let rank = rng.random_range(1..=m.min(5));
        let signals = low_rank_signals(&mut rng, m, t, rank, p);
        let space = signals[0].space().clone();
        let pd = dual_exponent(p).unwrap();
        let gen = DualVector64::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect(), pd, space.clone()).unwrap();
        let gen = gen.scaled(1.0 / gen.dual_norm());
        let outcomes: Vec<f64> = signals
            .iter()
            .map(|x| (gen.apply(x).unwrap() + rng.random_range(-noise..=noise)).clamp(-1.0, 1.0))
            .collect();
        let game = SemiOnlineGame64::new(signals.clone(), outcomes.clone(), GameConfig64::new(p, 1.0, t, None).unwrap()).unwrap();
        let trace = blaar_run(&game).unwrap();
        let x_bound = game.signal_bound().unwrap();
        for f in [DualVector64::zero(pd, space.clone()).unwrap(), gen.clone(), gen.scaled(3.0)] {
            let loss_f: f64 = signals.iter().zip(&outcomes).map(|(x, y)| (y - f.apply(x).unwrap()).powi(2)).sum();
            let bound = theorem1_bound(t, x_bound, 1.0, p, f.dual_norm().powi(2)).unwrap();
            prop_assert!(trace.total_loss() <= loss_f + bound + 1e-9 * (1.0 + bound));
        }
    }

    #[test]
    fn predictions_are_bounded_by_the_outcome_scale(seed in 0u64..1_000_000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let signals = low_rank_signals(&mut rng, 8, 20, 3, 3.0);
        let outcomes: Vec<f64> = (0..20).map(|_| rng.random_range(-1.0..1.0)).collect();
        let game = SemiOnlineGame64::new(signals, outcomes, GameConfig64::new(3.0, 1.0, 20, None).unwrap()).unwrap();
        let trace = blaar_run(&game).unwrap();
        // a ≥ 1 ≥ ‖r‖² keeps every prediction inside (−tY, tY)
        for (t, g) in trace.predictions.iter().enumerate() {
            prop_assert!(g.abs() <= (t as f64).max(1.0));
        }
    }
}
