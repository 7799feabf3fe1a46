//! One check per acceptance criterion, run in order so that the timings are
//! not distorted by sibling tests. Each prints a single PASS/FAIL line.

use std::io::Write;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

use blaar_core::sobolev::{measure_sandwich, probe_functions};
use blaar_core::{
    lp_norm, norm_equiv_factor, sobolev_norm, BandLimited, BesselTransform, DomainGrid64, LewisBasis64, LewisOptions,
    MeasureSpace64, Signal64, SobolevParams64, TrigTerm,
};
use blaar_harness::experiment::execute;
use blaar_harness::film::film_scenario;
use blaar_harness::selftest::{aar_kaar_check, lewis_det_check};
use blaar_harness::sweep::{run_sweep, SweepSpec};
use blaar_harness::ExperimentConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail = format!("{} in {:.2}s", out.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail = format!("{} (limit {}s)", out.detail, limit.as_secs());
        }
    }
    out
}

fn config(value: serde_json::Value) -> ExperimentConfig {
    ExperimentConfig::from_json(&value.to_string()).unwrap()
}

fn aar_kaar() -> Outcome {
    let c = aar_kaar_check(100).unwrap();
    check(c.pass, c.detail)
}

fn coordinate_bound() -> Outcome {
    let (mut violations, mut rows, mut worst) = (0, 0, f64::INFINITY);
    for seed in 0..100u64 {
        let n = 1 + (seed % 5) as usize;
        let horizon = 20 + (seed as usize * 37) % 181;
        let ridge = [0.1, 1.0, 10.0][(seed % 3) as usize];
        let outcomes = if seed % 3 == 0 { json!({"kind": "adversarial"}) } else { json!({"kind": "comparator", "noise": 0.2}) };
        let cfg = config(json!({
            "schema_version": 1,
            "mode": "aar",
            "game": {"p": 2.0, "y_bound": 1.0, "horizon": horizon, "ridge": ridge},
            "space": {"kind": "coordinates", "n": n},
            "data": {"kind": "generator", "seed": seed, "outcomes": outcomes},
            "comparators": {"random": 50},
            "bound": "eq1"
        }));
        let report = execute(&cfg).unwrap().report;
        assert!(report.rows.iter().any(|r| r.comparator_id == "ridge_fit"));
        rows = rows.max(report.rows.len());
        violations += report.rows.iter().filter(|r| !r.pass).count();
        worst = worst.min(report.worst_margin());
    }
    check(violations == 0 && rows >= 50, format!("100 games, ≥{rows} comparators each, {violations} violations, worst margin {worst:.3e}"))
}

/// Random `n ≤ 6` signals on `M ≤ 32` points for the solver sweeps.
fn lewis_sweep() -> Vec<(f64, Vec<Signal64>, LewisBasis64)> {
    let mut out = Vec::new();
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        for seed in 0..50u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed * 7 + 1);
            let n = rng.random_range(1..=6);
            let m = rng.random_range(n..=32);
            let space = Arc::new(MeasureSpace64::new((0..m).map(|_| rng.random_range(0.05..1.0)).collect()).unwrap());
            let signals: Vec<Signal64> = (0..n)
                .map(|_| Signal64::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect(), space.clone()).unwrap())
                .collect();
            let basis = LewisBasis64::build(&signals, p, &LewisOptions::default()).unwrap();
            out.push((p, signals, basis));
        }
    }
    out
}

fn lewis_solver(sweep: &[(f64, Vec<Signal64>, LewisBasis64)]) -> Outcome {
    let worst = sweep.iter().map(|(_, _, b)| b.biorthogonality_residual()).fold(0.0, f64::max);
    let det = lewis_det_check(20).unwrap();
    check(worst <= 1e-6 && det.pass, format!("{} bases, worst residual {worst:.3e}; {}", sweep.len(), det.detail))
}

fn kernel_equivalence(sweep: &[(f64, Vec<Signal64>, LewisBasis64)]) -> Outcome {
    let (mut worst, mut worst_l2) = (0.0f64, 0.0f64);
    for (p, signals, basis) in sweep {
        let k = basis.blaar_kernel().into_entries();
        worst = worst.max((&k - basis.integral_kernel().into_entries()).amax());
        if *p == 2.0 {
            let mu = signals[0].space().weights();
            let normalized = basis.normalized_kernel().into_entries();
            for (s, x) in signals.iter().enumerate() {
                for (l, y) in signals.iter().enumerate() {
                    let g: f64 = mu.iter().zip(x.values()).zip(y.values()).map(|((m, a), b)| m * a * b).sum();
                    worst_l2 = worst_l2.max((k[(s, l)] - g).abs()).max((normalized[(s, l)] - g).abs());
                }
            }
        }
    }
    check(worst <= 1e-6 && worst_l2 <= 1e-9, format!("max entry gap {worst:.3e}, p = 2 gap to the L2 Gram {worst_l2:.3e}"))
}

fn non_expansion(sweep: &[(f64, Vec<Signal64>, LewisBasis64)]) -> Outcome {
    let (mut diag, mut blow) = (0.0f64, 0.0f64);
    for (p, signals, basis) in sweep {
        let k = basis.normalized_kernel().into_entries();
        let limit = (basis.rank() as f64).powf((0.5 - 1.0 / p).abs());
        for (s, x) in signals.iter().enumerate() {
            let norm = x.lp_norm(*p).unwrap();
            diag = diag.max(k[(s, s)] / (norm * norm) - 1.0);
            blow = blow.max(norm / k[(s, s)].sqrt() / limit - 1.0);
        }
    }
    check(diag <= 1e-8 && blow <= 1e-6, format!("worst K̃_ss/‖x_s‖² − 1 = {diag:.3e}, worst blow-up excess {blow:.3e}"))
}

fn lattice_bound() -> Outcome {
    let (mut violations, mut rows, mut games) = (0, usize::MAX, 0);
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        for seed in 0..100u64 {
            let outcomes = if seed % 4 == 0 { json!({"kind": "adversarial"}) } else { json!({"kind": "comparator", "noise": 0.1 * (seed % 3) as f64}) };
            let cfg = config(json!({
                "schema_version": 1,
                "mode": "blaar",
                "game": {"p": p, "y_bound": 1.0, "horizon": 10 + (seed as usize * 13) % 190},
                "space": {"kind": "random_weights", "points": 4 + (seed % 29) as usize},
                "data": {"kind": "generator", "seed": seed, "signal_rank": 1 + (seed % 6) as usize, "outcomes": outcomes},
                "comparators": {"random": 20}
            }));
            let report = execute(&cfg).unwrap().report;
            rows = rows.min(report.rows.iter().filter(|r| !r.comparator_id.starts_with("ridge")).count());
            violations += report.rows.iter().filter(|r| !r.pass).count();
            games += 1;
        }
    }
    let (_, fits) = run_sweep(&SweepSpec::default()).unwrap();
    let slopes: Vec<String> = fits.iter().map(|f| format!("p={} {:.3}≤{:.3}", f.p, f.slope, f.theory + 0.15)).collect();
    let pass = violations == 0 && rows >= 20 && fits.iter().all(|f| f.pass);
    check(pass, format!("{games} games, ≥{rows} dual comparators, {violations} violations; slopes {}", slopes.join(", ")))
}

fn norm_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (mut violations, mut worst_eq) = (0, 0.0f64);
    for _ in 0..1000 {
        let n = rng.random_range(1..=10);
        let x = Signal64::coordinates((0..n).map(|_| rng.random_range(-3.0..3.0)).collect()).unwrap();
        let l2 = lp_norm(&x, 2.0).unwrap();
        let p = rng.random_range(1.0..=2.0);
        let q = rng.random_range(2.0..10.0);
        violations += usize::from(l2 > lp_norm(&x, p).unwrap() * (1.0 + 1e-12));
        violations += usize::from(l2 > norm_equiv_factor(n, q).unwrap() * lp_norm(&x, q).unwrap() * (1.0 + 1e-12));
        let c = Signal64::coordinates(vec![rng.random_range(0.1..3.0); n]).unwrap();
        let lhs = lp_norm(&c, 2.0).unwrap();
        let rhs = norm_equiv_factor(n, q).unwrap() * lp_norm(&c, q).unwrap();
        worst_eq = worst_eq.max((lhs - rhs).abs() / lhs);
    }
    check(violations == 0 && worst_eq <= 1e-12, format!("2000 inequality checks, {violations} violations, constant-vector gap {worst_eq:.1e}"))
}

fn sobolev_bridge() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut plancherel, mut round_trip, mut reproduce) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..20 {
        let side: f64 = rng.random_range(0.5..3.0);
        let grid = DomainGrid64::new(1, side, 64).unwrap();
        let s: f64 = rng.random_range(0.6..2.5);
        // distinct |k| make the terms orthogonal: ‖lift f‖² = Σ (1+ξ_k²)^s (a²+b²) L/2, plus a_0² L
        let mut terms: Vec<TrigTerm<f64>> = vec![TrigTerm { frequency: vec![0], cos: rng.random_range(-1.0..1.0), sin: 0.0 }];
        let mut expect = terms[0].cos.powi(2) * side;
        for k in 1..=5i64 {
            let (a, b) = (rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
            let xi = 2.0 * std::f64::consts::PI * k as f64 / side;
            expect += (1.0 + xi * xi).powf(s) * (a * a + b * b) * side / 2.0;
            terms.push(TrigTerm { frequency: vec![k], cos: a, sin: b });
        }
        let f = BandLimited::new(side, terms).unwrap();
        let sampled = f.sample(&grid).unwrap();
        let got = sobolev_norm(&sampled, &grid, &SobolevParams64::new(s, 2.0, 1).unwrap()).unwrap();
        plancherel = plancherel.max((got - expect.sqrt()).abs() / expect.sqrt());

        let bessel = BesselTransform::new(&grid, s).unwrap();
        let lifted = bessel.lift(&sampled).unwrap();
        let back = bessel.lower(&lifted).unwrap();
        for (a, b) in sampled.values().iter().zip(back.values()) {
            round_trip = round_trip.max((a - b).abs());
        }
        let p = rng.random_range(1.5..4.0);
        let params = SobolevParams64::new(s.max(0.6), p, 1).unwrap();
        let node = rng.random_range(0..64usize);
        let x = node as f64 * grid.spacing();
        let (beta, _) = blaar_core::dual_signal(&[x], &grid, &params).unwrap();
        let mu = grid.space().weights();
        let paired: f64 = (0..64).map(|k| mu[k] * beta.values()[k] * lifted.values()[k]).sum();
        reproduce = reproduce.max((paired - f.eval(&[x])).abs());
    }
    let mut drift = 0.0f64;
    for &(dimension, n, p, s) in &[(1, 32, 2.0, 1.0), (1, 32, 3.0, 1.0), (1, 32, 1.5, 2.0), (2, 16, 3.0, 2.0), (2, 16, 1.5, 2.0), (2, 16, 4.0, 1.0)] {
        let measure = |n: usize| {
            let grid = DomainGrid64::new(dimension, 1.0, n).unwrap();
            let probes = probe_functions(1.0, dimension, 3).unwrap();
            measure_sandwich(&grid, &SobolevParams64::new(s, p, dimension).unwrap(), &probes).unwrap().constant()
        };
        let (a, b) = (measure(n), measure(2 * n));
        drift = drift.max((a - b).abs() / a);
    }
    let pass = plancherel <= 1e-8 && round_trip <= 1e-8 && reproduce <= 1e-6 && drift <= 0.05;
    check(
        pass,
        format!("Plancherel {plancherel:.1e}, round trip {round_trip:.1e}, reproducing {reproduce:.1e}, sandwich drift {:.2}%", 100.0 * drift),
    )
}

fn film_crossover() -> Outcome {
    let pixels = 786_432;
    let table = film_scenario(pixels, &[pixels - 1, pixels, pixels + 1], f64::INFINITY, 24, 1.0, 1.0, 1.0).unwrap();
    let flags: Vec<bool> = table.rows.iter().map(|r| r.lattice_better).collect();
    check(
        table.crossover_seconds == Some(32_768) && flags == [true, false, false],
        format!("crossover at {:?} frames, {:?} s", table.crossover_frames, table.crossover_seconds),
    )
}

fn perceptron() -> Outcome {
    let (mut violations, mut rank_changes, mut runs, mut worst) = (0, 0, 0, 0.0f64);
    for &p in &[1.5, 2.0, 3.0, 4.0] {
        for seed in 0..20u64 {
            let cfg = config(json!({
                "schema_version": 1,
                "mode": "perceptron",
                "game": {"p": p, "y_bound": 1.0, "horizon": 80},
                "space": {"kind": "grid", "dimension": 1, "side": 1.0, "resolution": 64},
                "data": {"kind": "generator", "seed": seed},
                "sobolev": {"s": 1.0, "max_frequency": 3},
                "perceptron": {"gamma": 0.5, "a": 1.0},
                "comparators": {"random": 5}
            }));
            let first = execute(&cfg).unwrap();
            let again = execute(&cfg).unwrap();
            rank_changes += usize::from(first.trace.rank != again.trace.rank);
            violations += first.report.rows.iter().filter(|r| !r.pass).count();
            for r in &first.report.rows {
                worst = worst.max(r.loss_alg / r.bound);
            }
            runs += 1;
        }
    }
    check(
        violations == 0 && rank_changes == 0,
        format!("{runs} datasets, {violations} violations, worst mistakes/bound {worst:.3}, {rank_changes} rank changes on rerun"),
    )
}

fn determinism() -> Outcome {
    let configs = ["blaar_p3", "sobolev", "perceptron"];
    let mut identical = true;
    for name in configs {
        let path = format!("{}/configs/{name}.json", env!("CARGO_MANIFEST_DIR"));
        let dirs = [tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap()];
        for dir in &dirs {
            let status = Command::new(env!("CARGO_BIN_EXE_blaar"))
                .args(["run", "--config", &path, "--out", dir.path().to_str().unwrap()])
                .env_remove("BLAAR_OUT_DIR")
                .status()
                .unwrap();
            identical &= status.success();
        }
        for file in ["trace.json", "losses.csv"] {
            let a = std::fs::read(dirs[0].path().join(file)).unwrap();
            let b = std::fs::read(dirs[1].path().join(file)).unwrap();
            identical &= a == b;
        }
    }
    check(identical, format!("{} configs run twice", configs.len()))
}

#[test]
fn acceptance() {
    let sweep = lewis_sweep();
    let results = [
        ("1 aar/kaar equivalence", timed(Some(Duration::from_secs(5)), aar_kaar)),
        ("2 coordinate bound", timed(Some(Duration::from_secs(30)), coordinate_bound)),
        ("3 lewis solver", timed(Some(Duration::from_secs(60)), || lewis_solver(&sweep))),
        ("4 kernel equivalence", timed(None, || kernel_equivalence(&sweep))),
        ("5 non-expansion", timed(None, || non_expansion(&sweep))),
        ("6 lattice bound and growth", timed(Some(Duration::from_secs(300)), lattice_bound)),
        ("7 norm equivalence", timed(None, norm_equivalence)),
        ("8 sobolev bridge", timed(None, sobolev_bridge)),
        ("9 film crossover", timed(None, film_crossover)),
        ("10 perceptron", timed(None, perceptron)),
        ("11 determinism", timed(None, determinism)),
    ];
    // straight to the handle so the lines survive libtest's output capture
    let mut err = std::io::stderr().lock();
    for (name, r) in &results {
        writeln!(err, "{} criterion {name}: {}", if r.pass { "PASS" } else { "FAIL" }, r.detail).unwrap();
    }
    drop(err);
    let failed: Vec<&str> = results.iter().filter(|(_, r)| !r.pass).map(|(n, _)| *n).collect();
    assert!(failed.is_empty(), "failed: {failed:?}");
}
