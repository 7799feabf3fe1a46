//! Order-of-growth sweeps of the lattice learner's regret over `(p, T)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{
    ComparatorSpec, DataSpec, ExperimentConfig, GameSpec, GeneratorSpec, Mode, OutcomeSpec, OutputSpec, SpaceSpec,
    SCHEMA_VERSION,
};
use crate::error::Result;
use crate::experiment::execute_on;
use crate::generate::generate_game;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub ps: Vec<f64>,
    pub horizons: Vec<usize>,
    pub seeds: u64,
    pub base_seed: u64,
    pub space_points: usize,
    /// Kept small: the ridge transient lasts about `rank·√T` steps, longer
    /// than the shorter horizons once the rank grows.
    pub signal_rank: usize,
    /// Extra random comparators per game on top of zero, generator and the
    /// ridge fit.
    pub comparators: usize,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            ps: vec![1.5, 2.0, 3.0, 4.0],
            horizons: vec![25, 50, 100, 200, 400],
            seeds: 8,
            base_seed: 0,
            space_points: 24,
            signal_rank: 3,
            comparators: 20,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub p: f64,
    pub horizon: usize,
    /// Mean over seeds of `L_T(alg) - L_T(generator)` on noiseless games.
    pub mean_regret: f64,
    pub mean_bound: f64,
    pub worst_margin: f64,
    pub violations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub p: f64,
    pub slope: f64,
    pub intercept: f64,
    /// `1/2 + |1/2 - 1/p|`.
    pub theory: f64,
    pub pass: bool,
}

/// Tolerance on the fitted exponent above the theoretical one.
pub const SLOPE_SLACK: f64 = 0.15;

/// Noiseless realizable game used at each sweep point.
pub fn sweep_config(spec: &SweepSpec, p: f64, horizon: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        schema_version: SCHEMA_VERSION,
        mode: Mode::Blaar,
        game: GameSpec { p, y_bound: 1.0, horizon, ridge: None },
        space: SpaceSpec::RandomWeights { points: spec.space_points, min: 0.1, max: 1.0 },
        data: DataSpec::Generator(GeneratorSpec {
            seed,
            signal_rank: Some(spec.signal_rank),
            x_bound: 1.0,
            outcomes: OutcomeSpec::Comparator { noise: 0.0, scale: 1.0 },
        }),
        comparators: ComparatorSpec { random: spec.comparators, ..ComparatorSpec::default() },
        sobolev: None,
        perceptron: None,
        bound: None,
        output: OutputSpec::default(),
    }
}

/// Least-squares line through `(ln x, ln y)`.
pub fn log_log_fit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx) * (x - mx)).sum();
    let slope = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    (slope, my - slope * mx)
}

/// Each `(p, seed)` draws one game at the longest horizon; shorter horizons
/// replay its prefixes, so the growth fit compares the same sequence.
pub fn run_sweep(spec: &SweepSpec) -> Result<(Vec<SweepPoint>, Vec<SlopeFit>)> {
    let longest = spec.horizons.iter().copied().max().unwrap_or(0);
    let jobs: Vec<(f64, u64)> = spec.ps.iter().flat_map(|&p| (0..spec.seeds).map(move |s| (p, s))).collect();
    let results: Vec<(f64, usize, f64, f64, f64, usize)> = jobs
        .par_iter()
        .map(|&(p, s)| {
            let full = sweep_config(spec, p, longest, spec.base_seed + s);
            let data = generate_game(&full)?;
            spec.horizons
                .iter()
                .map(|&t| {
                    let config = sweep_config(spec, p, t, spec.base_seed + s);
                    let out = execute_on(&config, &data.prefix(t))?;
                    let generator =
                        out.report.rows.iter().find(|r| r.comparator_id == "generator").expect("generator row");
                    let violations = out.report.rows.iter().filter(|r| !r.pass).count();
                    Ok((p, t, generator.loss_alg - generator.loss_comp, generator.bound, out.report.worst_margin(), violations))
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();

    let mut points = Vec::new();
    for &p in &spec.ps {
        for &t in &spec.horizons {
            let cell: Vec<_> = results.iter().filter(|r| r.0 == p && r.1 == t).collect();
            let k = cell.len() as f64;
            points.push(SweepPoint {
                p,
                horizon: t,
                mean_regret: cell.iter().map(|r| r.2).sum::<f64>() / k,
                mean_bound: cell.iter().map(|r| r.3).sum::<f64>() / k,
                worst_margin: cell.iter().map(|r| r.4).fold(f64::INFINITY, f64::min),
                violations: cell.iter().map(|r| r.5).sum(),
            });
        }
    }
    let fits = spec
        .ps
        .iter()
        .map(|&p| {
            let row: Vec<&SweepPoint> = points.iter().filter(|pt| pt.p == p && pt.mean_regret > 0.0).collect();
            let xs: Vec<f64> = row.iter().map(|pt| pt.horizon as f64).collect();
            let ys: Vec<f64> = row.iter().map(|pt| pt.mean_regret).collect();
            let (slope, intercept) = log_log_fit(&xs, &ys);
            let theory = 0.5 + (0.5 - 1.0 / p).abs();
            SlopeFit { p, slope, intercept, theory, pass: row.len() >= 2 && slope <= theory + SLOPE_SLACK }
        })
        .collect();
    Ok((points, fits))
}
