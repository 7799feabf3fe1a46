//! Runs a configured experiment and checks the bounds.
//!
//! Artifacts are a pure function of the config, the seed and
//! [`VERSION`]: wall time is logged but never serialized.

use std::path::Path;
use std::time::{Duration, Instant};

use blaar_core::{
    aar_bound_eq1, aar_bound_eq2, blaar_run_with_basis, classify_run, evaluation_constant, kaar_bound, lp_norm,
    measure_sandwich, run_aar, sobolev::probe_functions, sobolev_blaar_run, sobolev_norm, theorem1_bound, GameConfig64,
    GramMatrix64, KaarPredictor, LewisOptions, SemiOnlineGame64,
};
use serde::{Deserialize, Serialize};

use crate::comparators::{function_comparators, lattice_comparators, Comparator, ComparatorKind};
use crate::config::{BoundKind, ExperimentConfig, Mode};
use crate::error::{HarnessError, Result};
use crate::generate::{generate_game, FunctionData, GameData, LatticeData};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Relative slack of the pass test: `margin ≥ -1e-9 · scale`.
pub const PASS_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub version: String,
    pub mode: Mode,
    pub seed: Option<u64>,
    pub horizon: usize,
    pub rank: usize,
    pub ridge: f64,
    pub solver_residual: f64,
    pub solver_iterations: usize,
    pub operator_scale: f64,
    pub lattice_exponent: f64,
    pub x_bound: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eval_constant: Option<f64>,
    /// Norm-equivalence constant against the classical norm, measured on
    /// probe functions.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sandwich_measured: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snap_distances: Option<Vec<f64>>,
    pub predictions: Vec<f64>,
    pub outcomes: Vec<f64>,
    /// Square loss per step; 0/1 mistakes in perceptron mode.
    pub step_losses: Vec<f64>,
}

impl TraceRecord {
    pub fn cumulative_losses(&self) -> Vec<f64> {
        let mut total = 0.0;
        self.step_losses.iter().map(|l| {
            total += l;
            total
        }).collect()
    }

    pub fn total_loss(&self) -> f64 {
        self.step_losses.iter().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub comparator_id: String,
    pub loss_alg: f64,
    pub loss_comp: f64,
    pub bound: f64,
    pub margin: f64,
    pub pass: bool,
}

impl ReportRow {
    pub fn new(comparator_id: String, loss_alg: f64, loss_comp: f64, bound: f64) -> Self {
        let margin = bound + loss_comp - loss_alg;
        let scale = 1f64.max(bound.abs()).max(loss_alg.abs()).max(loss_comp.abs());
        Self { comparator_id, loss_alg, loss_comp, bound, margin, pass: margin >= -PASS_SLACK * scale }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub mode: Mode,
    pub bound: BoundKind,
    pub rank: usize,
    pub ridge: f64,
    pub solver_residual: f64,
    pub rows: Vec<ReportRow>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl BoundReport {
    pub fn all_pass(&self) -> bool {
        self.rows.iter().all(|r| r.pass)
    }

    pub fn worst_margin(&self) -> f64 {
        self.rows.iter().map(|r| r.margin).fold(f64::INFINITY, f64::min)
    }
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub trace: TraceRecord,
    pub report: BoundReport,
}

pub fn square_losses(predictions: &[f64], outcomes: &[f64]) -> Vec<f64> {
    predictions.iter().zip(outcomes).map(|(g, y)| (y - g) * (y - g)).collect()
}

fn comparator_loss_dual(data: &LatticeData, c: &Comparator) -> Result<f64> {
    let ComparatorKind::Dual(f) = &c.kind else {
        return Err(HarnessError::config("function comparator on a lattice game"));
    };
    data.signals
        .iter()
        .zip(&data.outcomes)
        .try_fold(0.0, |acc, (x, y)| Ok(acc + (y - f.apply(x)?).powi(2)))
}

/// Plays the experiment and evaluates the selected bound for every
/// comparator.
pub fn execute(config: &ExperimentConfig) -> Result<RunOutput> {
    config.validate()?;
    let data = generate_game(config)?;
    execute_on(config, &data)
}

/// [`execute`] on already generated data, e.g. a prefix of a longer game.
pub fn execute_on(config: &ExperimentConfig, data: &GameData) -> Result<RunOutput> {
    let start = Instant::now();
    let seed = config.seed().unwrap_or(0);
    let mut out = match (data, config.mode) {
        (GameData::Lattice(d), Mode::Aar) => run_aar_mode(config, d, seed)?,
        (GameData::Lattice(d), Mode::Kaar) => run_kaar_mode(config, d, seed)?,
        (GameData::Lattice(d), Mode::Blaar) => run_blaar_mode(config, d, seed)?,
        (GameData::Function(d), Mode::Sobolev) => run_sobolev_mode(config, d, seed)?,
        (GameData::Function(d), Mode::Perceptron) => run_perceptron_mode(config, d, seed)?,
        _ => return Err(HarnessError::config("mode and data do not match")),
    };
    out.trace.seed = config.seed();
    out.report.wall_time = start.elapsed();
    log::info!(
        "{:?}: T = {}, n = {}, a = {:.6}, worst margin {:.6e}, {:.3}s",
        config.mode,
        out.trace.horizon,
        out.trace.rank,
        out.trace.ridge,
        out.report.worst_margin(),
        out.report.wall_time.as_secs_f64()
    );
    Ok(out)
}

fn base_record(config: &ExperimentConfig, predictions: Vec<f64>, outcomes: Vec<f64>, step_losses: Vec<f64>) -> TraceRecord {
    TraceRecord {
        version: VERSION.to_string(),
        mode: config.mode,
        seed: None,
        horizon: predictions.len(),
        rank: 0,
        ridge: 0.0,
        solver_residual: 0.0,
        solver_iterations: 0,
        operator_scale: 1.0,
        lattice_exponent: config.game.p,
        x_bound: 0.0,
        eval_constant: None,
        sandwich_measured: None,
        snap_distances: None,
        predictions,
        outcomes,
        step_losses,
    }
}

fn report(config: &ExperimentConfig, trace: &TraceRecord, rows: Vec<ReportRow>) -> BoundReport {
    BoundReport {
        mode: config.mode,
        bound: config.bound(),
        rank: trace.rank,
        ridge: trace.ridge,
        solver_residual: trace.solver_residual,
        rows,
        wall_time: Duration::ZERO,
    }
}

fn run_aar_mode(config: &ExperimentConfig, data: &LatticeData, seed: u64) -> Result<RunOutput> {
    let g = &config.game;
    let t = data.signals.len();
    let n = data.space.len();
    let x_sup = data.signals.iter().map(|x| x.values().iter().fold(0.0f64, |m, v| m.max(v.abs()))).fold(0.0, f64::max);
    let x_q = data.signals.iter().map(|x| lp_norm(x, data.signal_exponent)).collect::<blaar_core::Result<Vec<_>>>()?;
    let x_q = x_q.into_iter().fold(0.0, f64::max);
    let (tuned, _) = aar_bound_eq2(t, x_q, g.y_bound, n, g.p, 0.0)?;
    let bound_kind = config.bound();
    if bound_kind == BoundKind::Eq2 && g.ridge.is_some() {
        return Err(HarnessError::config("the eq2 bound fixes its own ridge; drop game.ridge"));
    }
    let ridge = g.ridge.unwrap_or(tuned);
    let signals: Vec<Vec<f64>> = data.signals.iter().map(|s| s.values().to_vec()).collect();
    let predictions = run_aar(&signals, &data.outcomes, ridge)?;
    let losses = square_losses(&predictions, &data.outcomes);
    let mut trace = base_record(config, predictions, data.outcomes.clone(), losses);
    trace.rank = n;
    trace.ridge = ridge;
    trace.x_bound = if bound_kind == BoundKind::Eq1 { x_sup } else { x_q };
    let loss_alg = trace.total_loss();
    let mut rows = Vec::new();
    for c in lattice_comparators(data, &config.comparators, seed, ridge)? {
        let ComparatorKind::Dual(f) = &c.kind else { unreachable!() };
        let loss_comp = comparator_loss_dual(data, &c)?;
        let bound = match bound_kind {
            BoundKind::Eq1 => {
                let l2_sq = f.values().iter().map(|v| v * v).sum();
                aar_bound_eq1(t, x_sup, g.y_bound, ridge, n, l2_sq)?
            }
            _ => aar_bound_eq2(t, x_q, g.y_bound, n, g.p, f.dual_norm().powi(2))?.1,
        };
        rows.push(ReportRow::new(c.id, loss_alg, loss_comp, bound));
    }
    let report = report(config, &trace, rows);
    Ok(RunOutput { trace, report })
}

fn l2_gram(data: &LatticeData) -> Result<GramMatrix64> {
    let mu = data.space.weights();
    let t = data.signals.len();
    let features = nalgebra::DMatrix::from_fn(t, mu.len(), |s, k| mu[k].sqrt() * data.signals[s].values()[k]);
    Ok(GramMatrix64::from_features(&features))
}

fn run_kaar_mode(config: &ExperimentConfig, data: &LatticeData, seed: u64) -> Result<RunOutput> {
    let g = &config.game;
    let ridge = g.ridge.unwrap_or(1.0);
    let gram = l2_gram(data)?;
    let predictions = KaarPredictor::new(&gram, ridge)?.predict_all(&data.outcomes)?;
    let losses = square_losses(&predictions, &data.outcomes);
    let mut trace = base_record(config, predictions, data.outcomes.clone(), losses);
    trace.rank = data.space.len();
    trace.ridge = ridge;
    trace.lattice_exponent = 2.0;
    trace.x_bound = gram.max_diagonal().sqrt();
    let loss_alg = trace.total_loss();
    let mut rows = Vec::new();
    for c in lattice_comparators(data, &config.comparators, seed, ridge)? {
        let ComparatorKind::Dual(f) = &c.kind else { unreachable!() };
        let bound = kaar_bound(&gram, ridge, g.y_bound, f.dual_norm().powi(2))?;
        rows.push(ReportRow::new(c.id.clone(), loss_alg, comparator_loss_dual(data, &c)?, bound));
    }
    let report = report(config, &trace, rows);
    Ok(RunOutput { trace, report })
}

fn run_blaar_mode(config: &ExperimentConfig, data: &LatticeData, seed: u64) -> Result<RunOutput> {
    let g = &config.game;
    let game_config = GameConfig64::new(g.p, g.y_bound, data.signals.len(), g.ridge)?;
    let game = SemiOnlineGame64::new(data.signals.clone(), data.outcomes.clone(), game_config)?;
    let (run, _) = blaar_run_with_basis(&game, &LewisOptions::default())?;
    let x_bound = game.signal_bound()?;
    let losses = square_losses(&run.predictions, &run.outcomes);
    let mut trace = base_record(config, run.predictions.clone(), run.outcomes.clone(), losses);
    trace.rank = run.rank;
    trace.ridge = run.ridge;
    trace.solver_residual = run.solver_residual;
    trace.solver_iterations = run.solver_iterations;
    trace.operator_scale = run.operator_scale;
    trace.x_bound = x_bound;
    let loss_alg = trace.total_loss();
    let mut rows = Vec::new();
    for c in lattice_comparators(data, &config.comparators, seed, run.ridge)? {
        let ComparatorKind::Dual(f) = &c.kind else { unreachable!() };
        let bound = theorem1_bound(game.horizon(), x_bound, g.y_bound, g.p, f.dual_norm().powi(2))?;
        rows.push(ReportRow::new(c.id.clone(), loss_alg, comparator_loss_dual(data, &c)?, bound));
    }
    let report = report(config, &trace, rows);
    Ok(RunOutput { trace, report })
}

/// Probe-based sandwich constant; only defined for integer smoothness.
fn sandwich(data: &FunctionData, max_frequency: i64) -> Option<f64> {
    let probes = probe_functions(data.grid.side(), data.grid.dimension(), max_frequency).ok()?;
    measure_sandwich(&data.grid, &data.params, &probes).ok().map(|s| s.constant())
}

fn function_values(data: &FunctionData, f: &blaar_core::BandLimited<f64>) -> Result<Vec<f64>> {
    data.points
        .iter()
        .map(|x| {
            let (node, _) = data.grid.snap(x)?;
            Ok(f.eval(&data.grid.coordinates(node)))
        })
        .collect()
}

fn max_frequency(config: &ExperimentConfig) -> i64 {
    config.sobolev.as_ref().map_or(3, |s| s.max_frequency)
}

fn run_sobolev_mode(config: &ExperimentConfig, data: &FunctionData, seed: u64) -> Result<RunOutput> {
    let g = &config.game;
    let run = sobolev_blaar_run(&data.points, &data.outcomes, &data.grid, &data.params, g.y_bound, g.ridge)?;
    let c = evaluation_constant(&data.grid, &data.params)?;
    let losses = square_losses(&run.trace.predictions, &run.trace.outcomes);
    let mut trace = base_record(config, run.trace.predictions.clone(), run.trace.outcomes.clone(), losses);
    trace.rank = run.trace.rank;
    trace.ridge = run.trace.ridge;
    trace.solver_residual = run.trace.solver_residual;
    trace.solver_iterations = run.trace.solver_iterations;
    trace.operator_scale = run.trace.operator_scale;
    trace.lattice_exponent = run.lattice_exponent;
    trace.x_bound = c;
    trace.eval_constant = Some(c);
    trace.sandwich_measured = sandwich(data, max_frequency(config));
    trace.snap_distances = Some(run.snap_distances.clone());
    let loss_alg = trace.total_loss();
    let mut rows = Vec::new();
    for comp in function_comparators(data, &config.comparators, seed, max_frequency(config))? {
        let ComparatorKind::Function(f) = &comp.kind else { unreachable!() };
        let values = function_values(data, f)?;
        let loss_comp: f64 = values.iter().zip(&data.outcomes).map(|(v, y)| (y - v).powi(2)).sum();
        let norm = sobolev_norm(&f.sample(&data.grid)?, &data.grid, &data.params)?;
        let bound = theorem1_bound(data.points.len(), c, g.y_bound, data.params.p, norm * norm)?;
        rows.push(ReportRow::new(comp.id.clone(), loss_alg, loss_comp, bound));
    }
    let report = report(config, &trace, rows);
    Ok(RunOutput { trace, report })
}

fn run_perceptron_mode(config: &ExperimentConfig, data: &FunctionData, seed: u64) -> Result<RunOutput> {
    let spec = config.perceptron.as_ref().ok_or_else(|| HarnessError::config("missing perceptron section"))?;
    let comparators = function_comparators(data, &config.comparators, seed, max_frequency(config))?;
    let functions: Vec<_> = comparators
        .iter()
        .map(|c| match &c.kind {
            ComparatorKind::Function(f) => f.clone(),
            ComparatorKind::Dual(_) => unreachable!(),
        })
        .collect();
    let out = classify_run(&data.points, &data.outcomes, &data.grid, &data.params, spec.gamma, spec.a, &functions)?;
    let step_losses = out.predictions.iter().zip(&data.outcomes).map(|(g, y)| if g == y { 0.0 } else { 1.0 }).collect();
    let mut trace = base_record(config, out.predictions.clone(), data.outcomes.clone(), step_losses);
    trace.rank = out.rank;
    trace.ridge = spec.a;
    trace.solver_residual = out.basis.residual;
    trace.solver_iterations = out.basis.iterations;
    trace.operator_scale = out.basis.operator_scale();
    trace.lattice_exponent = out.basis.p;
    trace.x_bound = out.eval_const;
    trace.eval_constant = Some(out.eval_const);
    let mistakes = out.mistakes() as f64;
    let rows = comparators
        .iter()
        .zip(&out.bounds)
        .map(|(c, b)| ReportRow::new(c.id.clone(), mistakes, 0.0, b.bound))
        .collect();
    let report = report(config, &trace, rows);
    Ok(RunOutput { trace, report })
}

#[derive(Serialize)]
struct LossRow {
    step: usize,
    prediction: f64,
    outcome: f64,
    step_loss: f64,
    cumulative_loss: f64,
}

fn create(path: &Path) -> Result<std::fs::File> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    }
    std::fs::File::create(path).map_err(|e| HarnessError::io(path, e))
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::io(path, std::io::Error::other(e.to_string()))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: impl IntoIterator<Item = R>) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for row in rows {
        w.serialize(row).map_err(|e| csv_error(path, e))?;
    }
    w.flush().map_err(|e| HarnessError::io(path, e))
}

pub fn read_csv<R: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<R>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| csv_error(path, e))?;
    r.deserialize().collect::<std::result::Result<Vec<R>, _>>().map_err(|e| csv_error(path, e))
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))?;
    Ok(())
}

/// `trace.json` and `losses.csv`.
pub fn write_run(dir: &Path, config: &ExperimentConfig, trace: &TraceRecord) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_json(&dir.join(&config.output.trace), trace)?;
    let cumulative = trace.cumulative_losses();
    let rows = (0..trace.horizon).map(|t| LossRow {
        step: t + 1,
        prediction: trace.predictions[t],
        outcome: trace.outcomes[t],
        step_loss: trace.step_losses[t],
        cumulative_loss: cumulative[t],
    });
    write_csv(&dir.join(&config.output.losses), rows)
}

/// `report.csv` and `report.json`.
pub fn write_report(dir: &Path, config: &ExperimentConfig, report: &BoundReport) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| HarnessError::io(dir, e))?;
    write_csv(&dir.join(&config.output.report), &report.rows)?;
    write_json(&dir.join(&config.output.report_json), report)
}

/// `L_t(0) + bound_t(0)` per step for the modes whose bound has a closed
/// form in `t`.
pub fn zero_envelope(config: &ExperimentConfig, trace: &TraceRecord) -> Result<Option<Vec<f64>>> {
    let y = config.game.y_bound;
    let mut zero_loss = 0.0;
    let mut out = Vec::with_capacity(trace.horizon);
    for (i, outcome) in trace.outcomes.iter().enumerate() {
        let t = i + 1;
        zero_loss += outcome * outcome;
        let bound = match (config.mode, config.bound()) {
            (Mode::Blaar | Mode::Sobolev, _) => theorem1_bound(t, trace.x_bound, y, config.game.p, 0.0)?,
            (Mode::Aar, BoundKind::Eq1) => aar_bound_eq1(t, trace.x_bound, y, trace.ridge, trace.rank, 0.0)?,
            (Mode::Aar, _) => aar_bound_eq2(t, trace.x_bound, y, trace.rank, config.game.p, 0.0)?.1,
            _ => return Ok(None),
        };
        out.push(zero_loss + bound);
    }
    Ok(Some(out))
}
