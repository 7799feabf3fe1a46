//! Oracle checks run by `blaar selftest`.

use blaar_core::{LewisBasis64, LewisOptions};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::film::film_scenario;
use crate::generate::data_rng;
use crate::oracles::{aar_kaar_gap, det_max_search, random_lattice_signals, random_regression_game};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, pass: bool, detail: String) -> Self {
        Self { name: name.into(), pass, detail }
    }
}

pub fn aar_kaar_check(games: u64) -> Result<Check> {
    let worst = (0..games)
        .into_par_iter()
        .map(|seed| {
            let (s, y, a) = random_regression_game(&mut data_rng(seed, 11));
            aar_kaar_gap(&s, &y, a)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Check::new("aar_kaar_equivalence", worst <= 1e-9, format!("{games} games, worst relative gap {worst:.3e}")))
}

/// Solver determinant against random search + polish, `n = 2`, `M ≤ 8`.
pub fn lewis_det_check(cases: u64) -> Result<Check> {
    let gaps = (0..cases)
        .into_par_iter()
        .map(|seed| {
            let m = 2 + (seed % 7) as usize;
            let p = [1.5, 3.0, 4.0][(seed % 3) as usize];
            let signals = random_lattice_signals(1000 + seed, 2, m)?;
            let basis = LewisBasis64::build(&signals, p, &LewisOptions::default())?;
            let oracle = det_max_search(&signals, p, 2000, &mut data_rng(seed, 13))?;
            let det = basis.determinant();
            Ok((oracle - det).abs() / det)
        })
        .collect::<Result<Vec<f64>>>()?;
    let worst = gaps.iter().copied().fold(0.0, f64::max);
    Ok(Check::new("lewis_det_max", worst <= 1e-4, format!("{cases} cases, worst relative gap {worst:.3e}")))
}

/// Coefficient kernel against the integral kernel.
pub fn kernel_check(cases: u64) -> Result<Check> {
    let worst = (0..cases)
        .into_par_iter()
        .map(|seed| {
            let n = 1 + (seed % 6) as usize;
            let m = n + (seed % 20) as usize;
            let p = [1.5, 2.0, 3.0, 4.0][(seed % 4) as usize];
            let signals = random_lattice_signals(2000 + seed, n + 3, m)?;
            let basis = LewisBasis64::build(&signals, p, &LewisOptions::default())?;
            let a = basis.blaar_kernel().into_entries();
            let b = basis.integral_kernel().into_entries();
            Ok((a - b).amax())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(Check::new("kernel_equivalence", worst <= 1e-6, format!("{cases} cases, worst entry gap {worst:.3e}")))
}

pub fn film_check() -> Result<Check> {
    let table = film_scenario(786_432, &[786_431, 786_432], f64::INFINITY, 24, 1.0, 1.0, 1.0)?;
    let pass = table.crossover_seconds == Some(32_768) && table.rows[0].lattice_better && !table.rows[1].lattice_better;
    Ok(Check::new("film_crossover", pass, format!("crossover at {:?} s", table.crossover_seconds)))
}

pub fn run_selftest(scale: u64) -> Result<Vec<Check>> {
    Ok(vec![aar_kaar_check(100 * scale)?, lewis_det_check(10 * scale)?, kernel_check(50 * scale)?, film_check()?])
}
