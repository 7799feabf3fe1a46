//! Semi-online regression competing with `(L_p)^*`.
//!
//! All `T` signals are announced up front. The learner extracts a maximal
//! independent subset, solves for its Lewis basis, and runs KAAR on the
//! induced kernel with `a = √(T n^{-|1/2-1/p|})` unless a ridge value is
//! supplied.

use crate::error::{check_len, invalid, Error, Result};
use crate::kaar::KaarPredictor;
use crate::lattice::{check_exponent, GameConfig, Signal};
use crate::lewis::{LewisBasis, LewisOptions};
use crate::Scalar;

/// Semi-online input: every signal plus the outcomes that will be revealed.
#[derive(Debug, Clone, PartialEq)]
pub struct SemiOnlineGame<T: Scalar> {
    pub signals: Vec<Signal<T>>,
    pub outcomes: Vec<T>,
    pub config: GameConfig<T>,
}

impl<T: Scalar> SemiOnlineGame<T> {
    pub fn new(signals: Vec<Signal<T>>, outcomes: Vec<T>, config: GameConfig<T>) -> Result<Self> {
        config.validate()?;
        check_len(config.horizon, signals.len())?;
        check_len(config.horizon, outcomes.len())?;
        if let Some(first) = signals.first() {
            if signals.iter().any(|s| !s.same_space(first)) {
                return Err(Error::SpaceMismatch);
            }
        }
        if outcomes.iter().any(|y| !y.is_finite()) {
            return Err(Error::NonFinite("outcomes"));
        }
        let game = Self { signals, outcomes, config };
        if !game.outcomes_in_range() {
            log::warn!(
                "outcomes exceed the declared bound Y = {}; regret bounds are not guaranteed",
                game.config.y_bound
            );
        }
        Ok(game)
    }

    pub fn horizon(&self) -> usize {
        self.signals.len()
    }

    pub fn outcomes_in_range(&self) -> bool {
        self.outcomes.iter().all(|y| y.abs() <= self.config.y_bound)
    }

    /// `max_t ‖x_t‖_p`, the tightest admissible signal bound `X`.
    pub fn signal_bound(&self) -> Result<T> {
        self.signals
            .iter()
            .try_fold(T::zero(), |m, s| Ok(m.max(s.lp_norm(self.config.p)?)))
    }
}

/// Per-step record of a played game.
#[derive(Debug, Clone, PartialEq)]
pub struct GameTrace<T> {
    pub predictions: Vec<T>,
    pub outcomes: Vec<T>,
    /// Cumulative losses `L_1, …, L_T`.
    pub losses: Vec<T>,
    pub ridge: T,
    /// Numerical rank from the independent-subset step.
    pub rank: usize,
    pub solver_residual: T,
    pub solver_iterations: usize,
    pub operator_scale: T,
    pub outcomes_in_range: bool,
}

impl<T: Scalar> GameTrace<T> {
    pub fn from_predictions(predictions: Vec<T>, outcomes: Vec<T>, ridge: T, rank: usize) -> Result<Self> {
        check_len(predictions.len(), outcomes.len())?;
        let mut total = T::zero();
        let losses = predictions
            .iter()
            .zip(&outcomes)
            .map(|(g, y)| {
                total += (*y - *g) * (*y - *g);
                total
            })
            .collect();
        Ok(Self {
            predictions,
            outcomes,
            losses,
            ridge,
            rank,
            solver_residual: T::zero(),
            solver_iterations: 0,
            operator_scale: T::one(),
            outcomes_in_range: true,
        })
    }

    pub fn horizon(&self) -> usize {
        self.predictions.len()
    }

    /// `L_T`.
    pub fn total_loss(&self) -> T {
        self.losses.last().copied().unwrap_or(T::zero())
    }
}

/// Ridge value `√(T n^{-|1/2-1/p|})`.
pub fn tuned_ridge<T: Scalar>(horizon: usize, rank: usize, p: T) -> Result<T> {
    check_exponent(p)?;
    if horizon == 0 || rank == 0 {
        return Err(invalid("rank", "horizon and rank must be positive"));
    }
    let kappa = (T::of(0.5) - T::one() / p).abs();
    Ok((T::of_usize(horizon) * T::of_usize(rank).powf(-kappa)).sqrt())
}

/// Plays the game and also returns the Lewis basis (absent when every signal
/// is zero).
pub fn blaar_run_with_basis<T: Scalar>(
    game: &SemiOnlineGame<T>,
    options: &LewisOptions<T>,
) -> Result<(GameTrace<T>, Option<LewisBasis<T>>)> {
    let horizon = game.horizon();
    let p = game.config.p;
    let basis = match LewisBasis::build(&game.signals, p, options) {
        Ok(b) => b,
        Err(Error::ZeroRank) => {
            log::warn!("all signals are zero; predicting 0 at every step");
            let ridge = game.config.ridge.unwrap_or_else(|| T::of_usize(horizon).sqrt());
            let mut trace = GameTrace::from_predictions(vec![T::zero(); horizon], game.outcomes.clone(), ridge, 0)?;
            trace.outcomes_in_range = game.outcomes_in_range();
            return Ok((trace, None));
        }
        Err(e) => return Err(e),
    };
    let rank = basis.rank();
    let ridge = match game.config.ridge {
        Some(a) => a,
        None => tuned_ridge(horizon, rank, p)?,
    };
    let predictor = KaarPredictor::new(&basis.normalized_kernel(), ridge)?;
    // outcomes are consumed strictly in order: step t sees y_1..y_{t-1}
    let mut predictions = Vec::with_capacity(horizon);
    for t in 0..horizon {
        predictions.push(predictor.predict(&game.outcomes[..t])?);
    }
    let mut trace = GameTrace::from_predictions(predictions, game.outcomes.clone(), ridge, rank)?;
    trace.solver_residual = basis.residual;
    trace.solver_iterations = basis.iterations;
    trace.operator_scale = basis.operator_scale();
    trace.outcomes_in_range = game.outcomes_in_range();
    Ok((trace, Some(basis)))
}

pub fn blaar_run<T: Scalar>(game: &SemiOnlineGame<T>) -> Result<GameTrace<T>> {
    blaar_run_with_basis(game, &LewisOptions::default()).map(|(trace, _)| trace)
}

fn check_bound_inputs<T: Scalar>(horizon: usize, values: &[(&'static str, T)]) -> Result<()> {
    if horizon == 0 {
        return Err(invalid("T", "horizon must be positive"));
    }
    for (name, v) in values {
        if !(*v >= T::zero()) || !v.is_finite() {
            return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
        }
    }
    Ok(())
}

/// `(Y²X² + ‖f‖²) T^{1/2 + |1/2 - 1/p|}`.
pub fn theorem1_bound<T: Scalar>(horizon: usize, x_bound: T, y_bound: T, p: T, f_dual_norm_sq: T) -> Result<T> {
    check_exponent(p)?;
    check_bound_inputs(horizon, &[("X", x_bound), ("Y", y_bound), ("f_dual_norm_sq", f_dual_norm_sq)])?;
    let kappa = (T::of(0.5) - T::one() / p).abs();
    let scale = y_bound * y_bound * x_bound * x_bound + f_dual_norm_sq;
    Ok(scale * T::of_usize(horizon).powf(T::of(0.5) + kappa))
}

fn check_lattice_constants<T: Scalar>(mp: T, mq: T) -> Result<()> {
    if mp >= T::one() && mq >= T::one() && mp.is_finite() && mq.is_finite() {
        Ok(())
    } else {
        Err(invalid("M", "convexity and concavity constants must be finite and ≥ 1"))
    }
}

/// Bound for a `p`-convex, `q`-concave lattice with `1 < p ≤ 2 ≤ q < ∞`:
/// `(Y²X² + ‖f‖²) M^{(p)} M_{(q)} T^{1/2 + α}`,
/// `α = max{1/p - 1/2, 1/2 - 1/q}`.
#[allow(clippy::too_many_arguments)]
pub fn theorem2_bound<T: Scalar>(
    horizon: usize,
    x_bound: T,
    y_bound: T,
    p: T,
    q: T,
    m_convex: T,
    m_concave: T,
    f_dual_norm_sq: T,
) -> Result<T> {
    let two = T::of(2.0);
    if !(p > T::one() && p <= two && q >= two && q.is_finite()) {
        return Err(invalid("p", "requires 1 < p ≤ 2 ≤ q < ∞"));
    }
    check_lattice_constants(m_convex, m_concave)?;
    check_bound_inputs(horizon, &[("X", x_bound), ("Y", y_bound), ("f_dual_norm_sq", f_dual_norm_sq)])?;
    let half = T::of(0.5);
    let alpha = (T::one() / p - half).max(half - T::one() / q);
    let scale = y_bound * y_bound * x_bound * x_bound + f_dual_norm_sq;
    Ok(scale * m_convex * m_concave * T::of_usize(horizon).powf(half + alpha))
}

/// Bound for a function space with evaluation constant `c_B` that is a
/// `q`-convex, `p`-concave lattice with `1 < q ≤ 2 ≤ p < ∞`:
/// `(Y²c_B² + ‖f‖²) M_{(p)} M^{(q)} T^{1/2 + β}`,
/// `β = max{1/q - 1/2, 1/2 - 1/p}`.
#[allow(clippy::too_many_arguments)]
pub fn theorem3_bound<T: Scalar>(
    horizon: usize,
    y_bound: T,
    p: T,
    q: T,
    eval_const: T,
    m_concave: T,
    m_convex: T,
    f_norm_sq: T,
) -> Result<T> {
    let two = T::of(2.0);
    if !(q > T::one() && q <= two && p >= two && p.is_finite()) {
        return Err(invalid("q", "requires 1 < q ≤ 2 ≤ p < ∞"));
    }
    check_lattice_constants(m_convex, m_concave)?;
    check_bound_inputs(horizon, &[("Y", y_bound), ("c_B", eval_const), ("f_norm_sq", f_norm_sq)])?;
    let half = T::of(0.5);
    let beta = (T::one() / q - half).max(half - T::one() / p);
    let scale = y_bound * y_bound * eval_const * eval_const + f_norm_sq;
    Ok(scale * m_concave * m_convex * T::of_usize(horizon).powf(half + beta))
}
