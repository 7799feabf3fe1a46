//! Seeded synthetic games and file-backed data.

use std::path::Path;
use std::sync::Arc;

use blaar_core::{dual_exponent, BandLimited, DomainGrid64, DualVector64, MeasureSpace64, Signal64, SobolevParams64, TrigTerm};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::{DataSpec, ExperimentConfig, GeneratorSpec, Mode, OutcomeSpec, SpaceSpec};
use crate::error::{HarnessError, Result};

/// Signals on a finite measure space (aar, kaar, blaar).
#[derive(Debug, Clone)]
pub struct LatticeData {
    pub space: Arc<MeasureSpace64>,
    pub signals: Vec<Signal64>,
    pub outcomes: Vec<f64>,
    /// Norm the signals are bounded in.
    pub signal_exponent: f64,
    pub generator: Option<DualVector64>,
}

/// Points on a periodic grid (sobolev, perceptron). Outcomes are labels in
/// perceptron mode.
#[derive(Debug, Clone)]
pub struct FunctionData {
    pub grid: DomainGrid64,
    pub params: SobolevParams64,
    pub points: Vec<Vec<f64>>,
    pub outcomes: Vec<f64>,
    pub generator: Option<BandLimited<f64>>,
}

#[derive(Debug, Clone)]
pub enum GameData {
    Lattice(LatticeData),
    Function(FunctionData),
}

impl GameData {
    pub fn outcomes(&self) -> &[f64] {
        match self {
            GameData::Lattice(d) => &d.outcomes,
            GameData::Function(d) => &d.outcomes,
        }
    }

    /// The first `t` steps.
    pub fn prefix(&self, t: usize) -> Self {
        match self {
            GameData::Lattice(d) => GameData::Lattice(LatticeData {
                signals: d.signals[..t.min(d.signals.len())].to_vec(),
                outcomes: d.outcomes[..t.min(d.outcomes.len())].to_vec(),
                ..d.clone()
            }),
            GameData::Function(d) => GameData::Function(FunctionData {
                points: d.points[..t.min(d.points.len())].to_vec(),
                outcomes: d.outcomes[..t.min(d.outcomes.len())].to_vec(),
                ..d.clone()
            }),
        }
    }
}

/// Exponent of the comparators' dual norm in each lattice mode. `kaar` works
/// with the `L_2(μ)` kernel whatever `p` says.
pub fn comparator_exponent(mode: Mode, p: f64) -> Result<f64> {
    Ok(match mode {
        Mode::Aar => p,
        Mode::Kaar => 2.0,
        _ => dual_exponent(p)?,
    })
}

#[derive(Debug, Deserialize, Serialize)]
struct FileData {
    #[serde(default)]
    signals: Vec<Vec<f64>>,
    #[serde(default)]
    points: Vec<Vec<f64>>,
    outcomes: Vec<f64>,
}

pub fn data_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn build_space(spec: &SpaceSpec, rng: &mut ChaCha8Rng) -> Result<Arc<MeasureSpace64>> {
    let space = match spec {
        SpaceSpec::Coordinates { n } => MeasureSpace64::counting(*n)?,
        SpaceSpec::Uniform { points, weight } => MeasureSpace64::uniform(*points, *weight)?,
        SpaceSpec::Weights { weights } => MeasureSpace64::new(weights.clone())?,
        SpaceSpec::RandomWeights { points, min, max } => {
            if !(0.0 < *min && min <= max) {
                return Err(HarnessError::config("random_weights needs 0 < min ≤ max"));
            }
            MeasureSpace64::new((0..*points).map(|_| rng.random_range(*min..=*max)).collect())?
        }
        SpaceSpec::Grid { .. } => return Err(HarnessError::config("grid spaces carry function data")),
    };
    Ok(Arc::new(space))
}

/// Random values normalized to unit dual norm.
pub fn random_dual(rng: &mut ChaCha8Rng, exponent_of_signals: f64, space: &Arc<MeasureSpace64>) -> Result<DualVector64> {
    loop {
        let values = (0..space.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
        let f = DualVector64::for_signal_exponent(values, exponent_of_signals, Arc::clone(space))?;
        let norm = f.dual_norm();
        if norm > 1e-12 {
            return Ok(f.scaled(1.0 / norm));
        }
    }
}

/// Trigonometric polynomial with frequencies in `{0..=F}^m`, random
/// coefficients, scaled to unit sup norm on `grid`.
pub fn random_band_limited(rng: &mut ChaCha8Rng, grid: &DomainGrid64, max_frequency: i64) -> Result<BandLimited<f64>> {
    let m = grid.dimension();
    let mut freqs: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..m {
        freqs = freqs
            .into_iter()
            .flat_map(|p| {
                (0..=max_frequency).map(move |j| {
                    let mut q = p.clone();
                    q.push(j);
                    q
                })
            })
            .collect();
    }
    let terms = freqs
        .into_iter()
        .map(|frequency| TrigTerm { frequency, cos: rng.random_range(-1.0..1.0), sin: rng.random_range(-1.0..1.0) })
        .collect();
    let f = BandLimited::new(grid.side(), terms)?;
    let sup = f.sample(grid)?.values().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(scale_function(&f, if sup > 0.0 { 1.0 / sup } else { 1.0 }))
}

pub fn scale_function(f: &BandLimited<f64>, factor: f64) -> BandLimited<f64> {
    BandLimited {
        side: f.side,
        terms: f
            .terms
            .iter()
            .map(|t| TrigTerm { frequency: t.frequency.clone(), cos: t.cos * factor, sin: t.sin * factor })
            .collect(),
    }
}

fn read_file(path: &Path) -> Result<FileData> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

/// Materializes the game a config describes. Deterministic in the seed.
pub fn generate_game(config: &ExperimentConfig) -> Result<GameData> {
    match &config.space {
        SpaceSpec::Grid { dimension, side, resolution } => {
            let grid = DomainGrid64::new(*dimension, *side, *resolution)?;
            let spec = config.sobolev.as_ref().ok_or_else(|| HarnessError::config("missing sobolev section"))?;
            let params = SobolevParams64::new(spec.s, config.game.p, *dimension)?;
            function_data(config, grid, params, spec.max_frequency)
        }
        _ => lattice_data(config),
    }
}

fn lattice_data(config: &ExperimentConfig) -> Result<GameData> {
    let comp_exp = comparator_exponent(config.mode, config.game.p)?;
    let signal_exponent = dual_exponent(comp_exp)?;
    let t = config.game.horizon;
    match &config.data {
        DataSpec::File { path } => {
            let file = read_file(path)?;
            let space = build_space(&config.space, &mut data_rng(0, 0))?;
            if file.signals.len() != t || file.outcomes.len() != t {
                return Err(HarnessError::config(format!(
                    "data file has {} signals and {} outcomes, horizon is {t}",
                    file.signals.len(),
                    file.outcomes.len()
                )));
            }
            let signals = file
                .signals
                .into_iter()
                .map(|v| Signal64::new(v, Arc::clone(&space)))
                .collect::<blaar_core::Result<Vec<_>>>()?;
            Ok(GameData::Lattice(LatticeData { space, signals, outcomes: file.outcomes, signal_exponent, generator: None }))
        }
        DataSpec::Generator(gen) => {
            let mut rng = data_rng(gen.seed, 0);
            let space = build_space(&config.space, &mut rng)?;
            let signals = random_signals(&mut rng, gen, &space, t, signal_exponent)?;
            let y = config.game.y_bound;
            let (outcomes, generator) = match gen.outcomes {
                OutcomeSpec::Adversarial => ((0..t).map(|_| rng.random_range(-y..=y)).collect(), None),
                OutcomeSpec::Comparator { noise, scale } => {
                    let f = random_dual(&mut rng, signal_exponent, &space)?.scaled(scale);
                    let outcomes = signals
                        .iter()
                        .map(|x| {
                            let e = if noise > 0.0 { rng.random_range(-noise..=noise) } else { 0.0 };
                            Ok((f.apply(x)? + e).clamp(-y, y))
                        })
                        .collect::<Result<Vec<f64>>>()?;
                    (outcomes, Some(f))
                }
            };
            Ok(GameData::Lattice(LatticeData { space, signals, outcomes, signal_exponent, generator }))
        }
    }
}

/// Combinations of `rank` random directions, scaled down to `‖x‖ ≤ X`.
fn random_signals(
    rng: &mut ChaCha8Rng,
    gen: &GeneratorSpec,
    space: &Arc<MeasureSpace64>,
    horizon: usize,
    exponent: f64,
) -> Result<Vec<Signal64>> {
    let m = space.len();
    let rank = gen.signal_rank.unwrap_or(m.min(horizon)).clamp(1, m);
    let directions: Vec<Vec<f64>> = (0..rank).map(|_| (0..m).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    (0..horizon)
        .map(|_| {
            let c: Vec<f64> = (0..rank).map(|_| rng.random_range(-1.0..1.0)).collect();
            let values = (0..m).map(|k| directions.iter().zip(&c).map(|(d, ci)| d[k] * ci).sum()).collect();
            let x = Signal64::new(values, Arc::clone(space))?;
            let norm = x.lp_norm(exponent)?;
            Ok(if norm > gen.x_bound { x.scaled(gen.x_bound / norm) } else { x })
        })
        .collect()
}

fn function_data(config: &ExperimentConfig, grid: DomainGrid64, params: SobolevParams64, max_frequency: i64) -> Result<GameData> {
    let t = config.game.horizon;
    match &config.data {
        DataSpec::File { path } => {
            let file = read_file(path)?;
            if file.points.len() != t || file.outcomes.len() != t {
                return Err(HarnessError::config(format!(
                    "data file has {} points and {} outcomes, horizon is {t}",
                    file.points.len(),
                    file.outcomes.len()
                )));
            }
            Ok(GameData::Function(FunctionData { grid, params, points: file.points, outcomes: file.outcomes, generator: None }))
        }
        DataSpec::Generator(gen) => {
            let mut rng = data_rng(gen.seed, 0);
            let y = config.game.y_bound;
            let f = random_band_limited(&mut rng, &grid, max_frequency)?;
            let side = grid.side();
            let draw = |rng: &mut ChaCha8Rng| -> Result<(Vec<f64>, f64)> {
                let x: Vec<f64> = (0..grid.dimension()).map(|_| rng.random_range(0.0..side)).collect();
                let (node, _) = grid.snap(&x)?;
                Ok((x, f.eval(&grid.coordinates(node))))
            };
            let mut points = Vec::with_capacity(t);
            let mut outcomes = Vec::with_capacity(t);
            if config.mode == Mode::Perceptron {
                let margin = config.perceptron.as_ref().map_or(0.1, |p| p.min_margin);
                let mut attempts = 0usize;
                while points.len() < t {
                    attempts += 1;
                    if attempts > 1000 * t {
                        return Err(HarnessError::config("could not draw points clearing the label margin"));
                    }
                    let (x, v) = draw(&mut rng)?;
                    if v.abs() >= margin {
                        points.push(x);
                        outcomes.push(if v >= 0.0 { 1.0 } else { -1.0 });
                    }
                }
                return Ok(GameData::Function(FunctionData { grid, params, points, outcomes, generator: Some(f) }));
            }
            let (noise, scale, adversarial) = match gen.outcomes {
                OutcomeSpec::Adversarial => (0.0, 0.0, true),
                OutcomeSpec::Comparator { noise, scale } => (noise, scale, false),
            };
            let f = scale_function(&f, scale * y);
            for _ in 0..t {
                let (x, _) = draw(&mut rng)?;
                let (node, _) = grid.snap(&x)?;
                let target = if adversarial {
                    rng.random_range(-y..=y)
                } else {
                    let e = if noise > 0.0 { rng.random_range(-noise..=noise) } else { 0.0 };
                    (f.eval(&grid.coordinates(node)) + e).clamp(-y, y)
                };
                points.push(x);
                outcomes.push(target);
            }
            Ok(GameData::Function(FunctionData {
                grid,
                params,
                points,
                outcomes,
                generator: if adversarial { None } else { Some(f) },
            }))
        }
    }
}
