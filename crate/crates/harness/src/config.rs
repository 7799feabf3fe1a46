//! JSON experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

pub const SCHEMA_VERSION: u32 = 1;

/// Only environment knob: overrides the `--out` directory.
pub const OUT_DIR_ENV: &str = "BLAAR_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Aar,
    Kaar,
    Blaar,
    Sobolev,
    Perceptron,
}

impl Mode {
    pub fn uses_grid(self) -> bool {
        matches!(self, Mode::Sobolev | Mode::Perceptron)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundKind {
    /// `a‖θ‖²_2 + nY² ln(TX²/a + 1)`, sup-norm signals.
    Eq1,
    /// Tuned `a` for `θ ∈ ℓ_p^n`.
    Eq2,
    /// Log-determinant bound of the kernel learner.
    Kaar,
    /// `(Y²X² + ‖f‖²) T^{1/2+|1/2-1/p|}`.
    Theorem1,
    /// The lattice bound on the dual signals with `X = c_B`.
    Sobolev,
    /// Second-order Perceptron mistake bound.
    Mistakes,
}

impl BoundKind {
    pub fn default_for(mode: Mode) -> Self {
        match mode {
            Mode::Aar => BoundKind::Eq1,
            Mode::Kaar => BoundKind::Kaar,
            Mode::Blaar => BoundKind::Theorem1,
            Mode::Sobolev => BoundKind::Sobolev,
            Mode::Perceptron => BoundKind::Mistakes,
        }
    }

    fn allowed(self, mode: Mode) -> bool {
        matches!(
            (mode, self),
            (Mode::Aar, BoundKind::Eq1 | BoundKind::Eq2)
                | (Mode::Kaar, BoundKind::Kaar)
                | (Mode::Blaar, BoundKind::Theorem1)
                | (Mode::Sobolev, BoundKind::Sobolev)
                | (Mode::Perceptron, BoundKind::Mistakes)
        )
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    pub mode: Mode,
    pub game: GameSpec,
    pub space: SpaceSpec,
    pub data: DataSpec,
    #[serde(default)]
    pub comparators: ComparatorSpec,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sobolev: Option<SobolevSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub perceptron: Option<PerceptronSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bound: Option<BoundKind>,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameSpec {
    /// Lattice exponent; in `aar` mode the comparator exponent (signals are
    /// bounded in the dual norm).
    pub p: f64,
    pub y_bound: f64,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SpaceSpec {
    /// Counting measure on `n` coordinates.
    Coordinates { n: usize },
    Uniform { points: usize, weight: f64 },
    Weights { weights: Vec<f64> },
    /// Weights drawn uniformly from `[min, max]` with the data seed.
    RandomWeights {
        points: usize,
        #[serde(default = "default_min_weight")]
        min: f64,
        #[serde(default = "default_max_weight")]
        max: f64,
    },
    /// Periodic grid `[0, side)^dimension`.
    Grid { dimension: usize, side: f64, resolution: usize },
}

fn default_min_weight() -> f64 {
    0.1
}

fn default_max_weight() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    Generator(GeneratorSpec),
    /// JSON file with `signals`/`points` and `outcomes`, relative to the
    /// config file.
    File { path: PathBuf },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    /// Dimension of the span the signals are drawn from.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub signal_rank: Option<usize>,
    #[serde(default = "one")]
    pub x_bound: f64,
    #[serde(default)]
    pub outcomes: OutcomeSpec,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OutcomeSpec {
    /// Uniform on `[-Y, Y]`.
    Adversarial,
    /// `clip(f(x) + U(-noise, noise))` for a random comparator of norm `scale`.
    Comparator {
        #[serde(default)]
        noise: f64,
        #[serde(default = "one")]
        scale: f64,
    },
}

impl Default for OutcomeSpec {
    fn default() -> Self {
        OutcomeSpec::Comparator { noise: 0.0, scale: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ComparatorSpec {
    pub zero: bool,
    pub generator: bool,
    pub ridge_fit: bool,
    /// Random comparators of unit norm, rescaled by `scales` in turn.
    pub random: usize,
    pub scales: Vec<f64>,
    /// Explicit dual-vector values over the space.
    pub explicit: Vec<Vec<f64>>,
}

impl Default for ComparatorSpec {
    fn default() -> Self {
        Self {
            zero: true,
            generator: true,
            ridge_fit: true,
            random: 20,
            scales: vec![0.25, 1.0, 4.0],
            explicit: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SobolevSpec {
    pub s: f64,
    /// Largest frequency per axis of generated band-limited functions.
    #[serde(default = "default_frequency")]
    pub max_frequency: i64,
}

fn default_frequency() -> i64 {
    3
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerceptronSpec {
    pub gamma: f64,
    #[serde(default = "one")]
    pub a: f64,
    /// Generated points with `|f(x)|` below this are redrawn.
    #[serde(default = "default_margin")]
    pub min_margin: f64,
}

fn default_margin() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub trace: String,
    pub losses: String,
    pub report: String,
    pub report_json: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self {
            trace: "trace.json".into(),
            losses: "losses.csv".into(),
            report: "report.csv".into(),
            report_json: "report.json".into(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self = serde_json::from_str(text).map_err(|e| HarnessError::config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
        let mut config = Self::from_json(&text)?;
        if let DataSpec::File { path: data } = &mut config.data {
            if data.is_relative() {
                if let Some(dir) = path.parent() {
                    *data = dir.join(&*data);
                }
            }
        }
        Ok(config)
    }

    pub fn bound(&self) -> BoundKind {
        self.bound.unwrap_or_else(|| BoundKind::default_for(self.mode))
    }

    pub fn seed(&self) -> Option<u64> {
        match &self.data {
            DataSpec::Generator(g) => Some(g.seed),
            DataSpec::File { .. } => None,
        }
    }

    /// Replaces the generator seed (`--seed`).
    pub fn with_seed(mut self, seed: u64) -> Result<Self> {
        match &mut self.data {
            DataSpec::Generator(g) => g.seed = seed,
            DataSpec::File { .. } => return Err(HarnessError::config("--seed needs a generator data source")),
        }
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(HarnessError::Config(m));
        if self.schema_version != SCHEMA_VERSION {
            return bad(format!("schema_version {} is not supported (expected {SCHEMA_VERSION})", self.schema_version));
        }
        let g = &self.game;
        if !(g.p > 1.0 && g.p.is_finite()) {
            return bad(format!("game.p must be in (1, ∞), got {}", g.p));
        }
        if !(g.y_bound > 0.0 && g.y_bound.is_finite()) {
            return bad("game.y_bound must be positive".into());
        }
        if g.horizon == 0 {
            return bad("game.horizon must be at least 1".into());
        }
        if let Some(a) = g.ridge {
            if !(a > 0.0 && a.is_finite()) {
                return bad("game.ridge must be positive".into());
            }
        }
        let grid = matches!(self.space, SpaceSpec::Grid { .. });
        if self.mode.uses_grid() != grid {
            return bad(format!("mode {:?} and space kind do not match", self.mode));
        }
        if self.mode == Mode::Aar && !matches!(self.space, SpaceSpec::Coordinates { .. }) {
            return bad("aar mode needs a coordinates space".into());
        }
        if matches!(self.space, SpaceSpec::RandomWeights { .. }) && self.seed().is_none() {
            return bad("random_weights spaces need a generator seed".into());
        }
        if self.mode.uses_grid() && self.sobolev.is_none() {
            return bad("sobolev and perceptron modes need a `sobolev` section".into());
        }
        if self.mode == Mode::Perceptron && self.perceptron.is_none() {
            return bad("perceptron mode needs a `perceptron` section".into());
        }
        if !self.bound().allowed(self.mode) {
            return bad(format!("bound {:?} does not apply to mode {:?}", self.bound(), self.mode));
        }
        if let DataSpec::Generator(gen) = &self.data {
            if !(gen.x_bound > 0.0 && gen.x_bound.is_finite()) {
                return bad("data.x_bound must be positive".into());
            }
            if let OutcomeSpec::Comparator { noise, scale } = gen.outcomes {
                if !(noise >= 0.0 && scale >= 0.0) {
                    return bad("noise and scale must be non-negative".into());
                }
            }
        }
        if self.comparators.scales.iter().any(|s| !(*s >= 0.0 && s.is_finite())) {
            return bad("comparator scales must be finite and non-negative".into());
        }
        Ok(())
    }
}

/// `--out`, unless the environment override is set.
pub fn resolve_out_dir(cli: Option<&Path>) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if !dir.is_empty() => PathBuf::from(dir),
        _ => cli.map(Path::to_path_buf).unwrap_or_else(|| PathBuf::from("out")),
    }
}
