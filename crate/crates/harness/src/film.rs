//! Film-scoring arithmetic: the coordinate-space bound
//! `(Y²X² + ‖θ‖²) T^{1/2} n^{1/2-1/p}` against the lattice bound
//! `(Y²X² + ‖θ‖²) T^{1-1/p}` for `p ≥ 2`.
//!
//! Their ratio is `(T/n)^{1/2-1/p}`, so for `p > 2` the lattice bound is the
//! smaller one exactly when `T < n`. The decision is made on integers;
//! `p = ∞` is accepted and gives the `T^{1/2} n^{1/2}` against `T` regime.

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmRow {
    pub frames: u64,
    pub seconds: f64,
    pub coordinate_bound: f64,
    pub lattice_bound: f64,
    pub lattice_better: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilmTable {
    pub pixels: u64,
    pub p: f64,
    pub fps: u64,
    /// Frames from which the coordinate bound is no worse; `None` when the
    /// two bounds share the same order (`p = 2`).
    pub crossover_frames: Option<u64>,
    /// `crossover_frames / fps` when that divides exactly.
    pub crossover_seconds: Option<u64>,
    pub rows: Vec<FilmRow>,
}

/// The lattice bound is strictly smaller iff `T < n` (for `p > 2`).
pub fn lattice_bound_better(frames: u64, pixels: u64, p: f64) -> bool {
    p > 2.0 && frames < pixels
}

pub fn film_scenario(pixels: u64, horizons: &[u64], p: f64, fps: u64, y_bound: f64, x_bound: f64, theta_sq: f64) -> Result<FilmTable> {
    if !(p >= 2.0) {
        return Err(HarnessError::config(format!("film scenario needs p ≥ 2, got {p}")));
    }
    if pixels == 0 || fps == 0 {
        return Err(HarnessError::config("pixels and fps must be positive"));
    }
    let scale = y_bound * y_bound * x_bound * x_bound + theta_sq;
    let kappa = 0.5 - 1.0 / p;
    let rows = horizons
        .iter()
        .map(|&frames| {
            let t = frames as f64;
            FilmRow {
                frames,
                seconds: t / fps as f64,
                coordinate_bound: scale * t.sqrt() * (pixels as f64).powf(kappa),
                lattice_bound: scale * t.powf(1.0 - 1.0 / p),
                lattice_better: lattice_bound_better(frames, pixels, p),
            }
        })
        .collect();
    let crossover_frames = (p > 2.0).then_some(pixels);
    let crossover_seconds = crossover_frames.filter(|f| f % fps == 0).map(|f| f / fps);
    Ok(FilmTable { pixels, p, fps, crossover_frames, crossover_seconds, rows })
}

/// Powers of two up to `4n`, plus `n` itself, as a default horizon list.
pub fn default_horizons(pixels: u64) -> Vec<u64> {
    let mut out: Vec<u64> = std::iter::successors(Some(1u64), |t| t.checked_mul(2)).take_while(|t| *t <= 4 * pixels).collect();
    out.push(pixels);
    out.sort_unstable();
    out.dedup();
    out
}
