//! Brute-force references the fast paths are checked against.

use argmin::core::{CostFunction, Error as ArgminError, Executor, State};
use argmin::solver::neldermead::NelderMead;
use blaar_core::{run_aar, GramMatrix64, KaarPredictor, MeasureSpace64, Signal64};
use nalgebra::DMatrix;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{HarnessError, Result};
use crate::generate::data_rng;

/// Largest relative per-step gap between AAR and KAAR on the dot-product
/// Gram, with `max(|a|, |b|, 1e-12)` as the denominator.
pub fn aar_kaar_gap(signals: &[Vec<f64>], outcomes: &[f64], ridge: f64) -> Result<f64> {
    let aar = run_aar(signals, outcomes, ridge)?;
    let gram = GramMatrix64::dot_product(signals)?;
    let kaar = KaarPredictor::new(&gram, ridge)?.predict_all(outcomes)?;
    Ok(aar
        .iter()
        .zip(&kaar)
        .map(|(a, b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-12))
        .fold(0.0, f64::max))
}

/// Random game with `n ≤ 5`, `T ≤ 20`.
pub fn random_regression_game(rng: &mut ChaCha8Rng) -> (Vec<Vec<f64>>, Vec<f64>, f64) {
    let n = rng.random_range(1..=5);
    let t = rng.random_range(1..=20);
    let signals = (0..t).map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let outcomes = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
    (signals, outcomes, rng.random_range(0.1..5.0))
}

/// `ln|det L| - n ln ‖γ_{LX}‖_p` for lower-triangular `L` with `L_11 = 1`
/// and a log-parametrized diagonal. Left-orthogonal factors and scale leave
/// the value unchanged, so this covers every `C` up to those symmetries.
struct LogVolume<'a> {
    x: &'a DMatrix<f64>,
    weights: &'a [f64],
    p: f64,
}

impl LogVolume<'_> {
    fn n(&self) -> usize {
        self.x.nrows()
    }

    fn unpack(&self, theta: &[f64]) -> DMatrix<f64> {
        let n = self.n();
        let mut l = DMatrix::zeros(n, n);
        let mut it = theta.iter();
        for i in 0..n {
            for j in 0..=i {
                l[(i, j)] = if i == 0 && j == 0 {
                    1.0
                } else if i == j {
                    it.next().map_or(0.0, |v| v.exp())
                } else {
                    *it.next().unwrap_or(&0.0)
                };
            }
        }
        l
    }

    fn dim(&self) -> usize {
        let n = self.n();
        n * (n + 1) / 2 - 1
    }

    fn value(&self, theta: &[f64]) -> f64 {
        let l = self.unpack(theta);
        let z = &l * self.x;
        let norm_p = z
            .column_iter()
            .zip(self.weights)
            .map(|(col, w)| w * col.norm().powf(self.p))
            .sum::<f64>()
            .powf(1.0 / self.p);
        let log_det: f64 = (0..self.n()).map(|i| l[(i, i)].abs().ln()).sum();
        log_det - self.n() as f64 * norm_p.ln()
    }
}

impl CostFunction for LogVolume<'_> {
    type Param = Vec<f64>;
    type Output = f64;

    fn cost(&self, theta: &Self::Param) -> std::result::Result<f64, ArgminError> {
        let v = self.value(theta);
        Ok(if v.is_finite() { -v } else { f64::INFINITY })
    }
}

/// Maximal `|det C|` subject to `‖γ_Z‖_p ≤ 1` by random search over
/// `samples` points followed by Nelder–Mead polishing.
pub fn det_max_search(signals: &[Signal64], p: f64, samples: usize, rng: &mut ChaCha8Rng) -> Result<f64> {
    let space: &MeasureSpace64 = signals.first().ok_or_else(|| HarnessError::Oracle("no signals".into()))?.space();
    let x = DMatrix::from_fn(signals.len(), space.len(), |i, k| signals[i].values()[k]);
    let problem = LogVolume { x: &x, weights: space.weights(), p };
    let dim = problem.dim();
    if dim == 0 {
        return Ok(problem.value(&[]).exp());
    }
    let mut best = vec![0.0; dim];
    let mut best_value = problem.value(&best);
    for _ in 0..samples {
        let theta: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let v = problem.value(&theta);
        if v > best_value {
            best_value = v;
            best = theta;
        }
    }
    for round in 0..3 {
        let step = 0.5 / (1 + round * 4) as f64;
        let mut simplex = vec![best.clone()];
        for i in 0..dim {
            let mut vertex = best.clone();
            vertex[i] += step;
            simplex.push(vertex);
        }
        let solver = NelderMead::new(simplex)
            .with_sd_tolerance(1e-15)
            .map_err(|e| HarnessError::Oracle(e.to_string()))?;
        let problem = LogVolume { x: &x, weights: space.weights(), p };
        let result = Executor::new(problem, solver)
            .configure(|state| state.max_iters(4000))
            .run()
            .map_err(|e| HarnessError::Oracle(e.to_string()))?;
        if let Some(theta) = result.state().get_best_param() {
            let v = LogVolume { x: &x, weights: space.weights(), p }.value(theta);
            if v >= best_value {
                best_value = v;
                best = theta.clone();
            }
        }
    }
    Ok(best_value.exp())
}

/// `n` random signals on `m` random weights.
pub fn random_lattice_signals(seed: u64, n: usize, m: usize) -> Result<Vec<Signal64>> {
    let mut rng = data_rng(seed, 3);
    let space = std::sync::Arc::new(MeasureSpace64::new((0..m).map(|_| rng.random_range(0.1..1.0)).collect())?);
    (0..n)
        .map(|_| Ok(Signal64::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect(), space.clone())?))
        .collect()
}
