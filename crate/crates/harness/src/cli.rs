//! Command line front end.
//!
//! Exit codes: 0 on success, 1 on a runtime error or a failed check, 2 on a
//! usage error. Runtime errors are printed to stderr as one JSON object.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{resolve_out_dir, ExperimentConfig};
use crate::error::{HarnessError, Result};
use crate::experiment::{execute, read_csv, write_csv, write_json, write_report, write_run, zero_envelope};
use crate::film::{default_horizons, film_scenario};
use crate::plot::{plot_growth, plot_losses};
use crate::selftest::run_selftest;
use crate::sweep::{run_sweep, SlopeFit, SweepPoint, SweepSpec};

#[derive(Debug, Parser)]
#[command(name = "blaar", version, about = "Online regression in Banach lattices")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Play a configured game and write the trace and loss table.
    Run(RunArgs),
    /// Play a configured game and check its bound against every comparator.
    Verify(RunArgs),
    /// Compare the coordinate and lattice bounds on a film of frames.
    Film(FilmArgs),
    /// Measure regret growth against `T` for several exponents.
    Sweep(SweepArgs),
    /// Run the built-in oracle checks.
    Selftest(SelftestArgs),
    /// Draw a loss curve from a config, or a growth plot from a sweep.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the generator seed in the config.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory; `BLAAR_OUT_DIR` takes precedence.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FilmArgs {
    #[arg(long, default_value_t = 786_432)]
    pub pixels: u64,
    /// Lattice exponent, at least 2; `inf` is accepted.
    #[arg(long, default_value_t = f64::INFINITY)]
    pub p: f64,
    #[arg(long, default_value_t = 24)]
    pub fps: u64,
    /// Frame counts; defaults to a log-spaced range around the crossover.
    #[arg(long, value_delimiter = ',')]
    pub horizons: Vec<u64>,
    #[arg(long, default_value_t = 1.0)]
    pub y_bound: f64,
    #[arg(long, default_value_t = 1.0)]
    pub x_bound: f64,
    #[arg(long, default_value_t = 1.0)]
    pub theta_sq: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    pub horizons: Vec<usize>,
    #[arg(long)]
    pub seeds: Option<u64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Dimension of the span the signals are drawn from.
    #[arg(long)]
    pub signal_rank: Option<usize>,
    #[arg(long)]
    pub space_points: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Multiplies the number of random cases.
    #[arg(long, default_value_t = 1)]
    pub scale: u64,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Config whose game is replayed for `loss_curve.svg`.
    #[arg(long, required_unless_present = "sweep")]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Directory holding `sweep.csv` and `fits.csv`, for `growth.svg`.
    #[arg(long)]
    pub sweep: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn load_config(config: &Path, seed: Option<u64>) -> Result<ExperimentConfig> {
    let config = ExperimentConfig::load(config)?;
    match seed {
        Some(seed) => config.with_seed(seed),
        None => Ok(config),
    }
}

fn out_dir(out: Option<&Path>) -> Result<PathBuf> {
    let dir = resolve_out_dir(out);
    std::fs::create_dir_all(&dir).map_err(|e| HarnessError::io(&dir, e))?;
    Ok(dir)
}

fn run(args: &RunArgs, check: bool) -> Result<bool> {
    let config = load_config(&args.config, args.seed)?;
    let dir = out_dir(args.out.as_deref())?;
    let output = execute(&config)?;
    write_run(&dir, &config, &output.trace)?;
    log::info!("{:?} {} steps in {:?}", config.mode, output.trace.horizon, output.report.wall_time);
    if !check {
        println!("L_T = {:.6} over {} steps, written to {}", output.trace.total_loss(), output.trace.horizon, dir.display());
        return Ok(true);
    }
    write_report(&dir, &config, &output.report)?;
    let failed = output.report.rows.iter().filter(|r| !r.pass).count();
    println!(
        "{} comparators, {} failed, worst margin {:.6e}",
        output.report.rows.len(),
        failed,
        output.report.worst_margin()
    );
    Ok(failed == 0)
}

fn film(args: &FilmArgs) -> Result<bool> {
    let horizons = if args.horizons.is_empty() { default_horizons(args.pixels) } else { args.horizons.clone() };
    let table = film_scenario(args.pixels, &horizons, args.p, args.fps, args.y_bound, args.x_bound, args.theta_sq)?;
    let dir = out_dir(args.out.as_deref())?;
    write_csv(&dir.join("film.csv"), &table.rows)?;
    write_json(&dir.join("film.json"), &table)?;
    match table.crossover_seconds {
        Some(s) => println!("lattice bound better below {} frames ({s} s)", table.crossover_frames.unwrap_or(0)),
        None => println!("no crossover"),
    }
    Ok(true)
}

fn sweep(args: &SweepArgs) -> Result<bool> {
    let mut spec = SweepSpec::default();
    if !args.p.is_empty() {
        spec.ps = args.p.clone();
    }
    if !args.horizons.is_empty() {
        spec.horizons = args.horizons.clone();
    }
    if let Some(seeds) = args.seeds {
        spec.seeds = seeds;
    }
    if let Some(seed) = args.seed {
        spec.base_seed = seed;
    }
    if let Some(rank) = args.signal_rank {
        spec.signal_rank = rank;
    }
    if let Some(points) = args.space_points {
        spec.space_points = points;
    }
    let (points, fits) = run_sweep(&spec)?;
    let dir = out_dir(args.out.as_deref())?;
    write_csv(&dir.join("sweep.csv"), &points)?;
    write_csv(&dir.join("fits.csv"), &fits)?;
    for fit in &fits {
        println!("p = {}: slope {:.3}, theory {:.3} [{}]", fit.p, fit.slope, fit.theory, verdict(fit.pass));
    }
    let violations: usize = points.iter().map(|p| p.violations).sum();
    Ok(violations == 0 && fits.iter().all(|f| f.pass))
}

fn selftest(args: &SelftestArgs) -> Result<bool> {
    let checks = run_selftest(args.scale.max(1))?;
    for check in &checks {
        println!("{} {}: {}", verdict(check.pass), check.name, check.detail);
    }
    Ok(checks.iter().all(|c| c.pass))
}

fn plot(args: &PlotArgs) -> Result<bool> {
    let dir = out_dir(args.out.as_deref())?;
    if let Some(config) = &args.config {
        let config = load_config(config, args.seed)?;
        let output = execute(&config)?;
        let envelope = zero_envelope(&config, &output.trace)?;
        let path = dir.join("loss_curve.svg");
        plot_losses(&output.trace, envelope.as_deref(), &path)?;
        println!("{}", path.display());
    }
    if let Some(sweep_dir) = &args.sweep {
        let points: Vec<SweepPoint> = read_csv(&sweep_dir.join("sweep.csv"))?;
        let fits: Vec<SlopeFit> = read_csv(&sweep_dir.join("fits.csv"))?;
        let path = dir.join("growth.svg");
        plot_growth(&points, &fits, &path)?;
        println!("{}", path.display());
    }
    Ok(true)
}

fn verdict(pass: bool) -> &'static str {
    if pass {
        "PASS"
    } else {
        "FAIL"
    }
}

pub fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Run(args) => run(args, false),
        Command::Verify(args) => run(args, true),
        Command::Film(args) => film(args),
        Command::Sweep(args) => sweep(args),
        Command::Selftest(args) => selftest(args),
        Command::Plot(args) => plot(args),
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(1)
        }
    }
}
