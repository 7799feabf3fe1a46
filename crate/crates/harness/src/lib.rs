//! Experiment harness: configs, data generation, bound checks, the film
//! scenario, growth sweeps and plots.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod comparators;
pub mod config;
pub mod error;
pub mod experiment;
pub mod film;
pub mod generate;
pub mod oracles;
pub mod plot;
pub mod selftest;
pub mod sweep;

pub use config::{BoundKind, ExperimentConfig, Mode};
pub use error::{HarnessError, Result};
pub use experiment::{execute, BoundReport, ReportRow, RunOutput, TraceRecord};
pub use film::{film_scenario, FilmTable};
pub use generate::{generate_game, GameData};
pub use sweep::{run_sweep, SweepSpec};
