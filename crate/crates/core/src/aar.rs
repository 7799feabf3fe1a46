//! The Aggregating Algorithm for Regression on `R^n`.
//!
//! At step `T` the learner predicts
//! `γ_T = (Σ_{t<T} y_t x_t)' (aI + Σ_{t≤T} x_t x_t')^{-1} x_T`;
//! note that the current signal enters the matrix before the outcome is known.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, invalid, Error, Result};
use crate::lattice::{check_exponent, dual_exponent};
use crate::linalg::cholesky;
use crate::Scalar;

/// Accumulated history of an AAR game: `aI + Σ x_t x_t'` and `Σ y_t x_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct AarState<T: Scalar> {
    gram: DMatrix<T>,
    moment: DVector<T>,
    ridge: T,
}

impl<T: Scalar> AarState<T> {
    pub fn new(dim: usize, ridge: T) -> Result<Self> {
        if dim == 0 {
            return Err(invalid("dim", "dimension must be positive"));
        }
        if !(ridge > T::zero()) || !ridge.is_finite() {
            return Err(invalid("a", "ridge parameter must be positive"));
        }
        Ok(Self {
            gram: DMatrix::identity(dim, dim) * ridge,
            moment: DVector::zeros(dim),
            ridge,
        })
    }

    pub fn dim(&self) -> usize {
        self.moment.len()
    }

    pub fn ridge(&self) -> T {
        self.ridge
    }

    pub fn gram(&self) -> &DMatrix<T> {
        &self.gram
    }

    pub fn moment(&self) -> &DVector<T> {
        &self.moment
    }

    fn check_signal(&self, x: &[T]) -> Result<DVector<T>> {
        check_len(self.dim(), x.len())?;
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal"));
        }
        Ok(DVector::from_column_slice(x))
    }

    /// Prediction for a new signal; `x_new` is folded into the matrix first.
    pub fn predict(&self, x_new: &[T]) -> Result<T> {
        let x = self.check_signal(x_new)?;
        let mut m = self.gram.clone();
        m.ger(T::one(), &x, &x, T::one());
        let z = cholesky(m)?.solve(&x);
        Ok(self.moment.dot(&z))
    }

    /// Records the revealed example `(x, y)`.
    pub fn update(mut self, x: &[T], y: T) -> Result<Self> {
        let x = self.check_signal(x)?;
        if !y.is_finite() {
            return Err(Error::NonFinite("outcome"));
        }
        self.gram.ger(T::one(), &x, &x, T::one());
        self.moment.axpy(y, &x, T::one());
        Ok(self)
    }
}

/// Plays the online protocol on a full sequence and returns the per-step predictions.
pub fn run_aar<T: Scalar>(signals: &[Vec<T>], outcomes: &[T], ridge: T) -> Result<Vec<T>> {
    check_len(signals.len(), outcomes.len())?;
    let Some(first) = signals.first() else {
        return Ok(Vec::new());
    };
    let mut state = AarState::new(first.len(), ridge)?;
    let mut predictions = Vec::with_capacity(signals.len());
    for (x, y) in signals.iter().zip(outcomes) {
        predictions.push(state.predict(x)?);
        state = state.update(x, *y)?;
    }
    Ok(predictions)
}

fn check_nonneg<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v >= T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and non-negative, got {v}")))
    }
}

fn check_positive<T: Scalar>(name: &'static str, v: T) -> Result<()> {
    if v > T::zero() && v.is_finite() {
        Ok(())
    } else {
        Err(invalid(name, format!("must be finite and positive, got {v}")))
    }
}

fn check_steps(horizon: usize, dim: usize) -> Result<()> {
    if horizon == 0 {
        return Err(invalid("T", "horizon must be positive"));
    }
    if dim == 0 {
        return Err(invalid("n", "dimension must be positive"));
    }
    Ok(())
}

/// Regret term `a‖θ‖²_2 + nY² ln(TX²/a + 1)` for signals with `‖x_t‖_∞ ≤ X`.
pub fn aar_bound_eq1<T: Scalar>(
    horizon: usize,
    x_bound: T,
    y_bound: T,
    ridge: T,
    dim: usize,
    theta_l2_sq: T,
) -> Result<T> {
    check_steps(horizon, dim)?;
    check_nonneg("X", x_bound)?;
    check_nonneg("Y", y_bound)?;
    check_positive("a", ridge)?;
    check_nonneg("theta_l2_sq", theta_l2_sq)?;
    let t = T::of_usize(horizon);
    let log_term = (t * x_bound * x_bound / ridge + T::one()).ln();
    Ok(ridge * theta_l2_sq + T::of_usize(dim) * y_bound * y_bound * log_term)
}

/// Tuned ridge parameter and regret for competing with `θ ∈ ℓ_p^n` when
/// `‖x_t‖_q ≤ X`: `a = √(T n^{1-2/q})` and
/// `(Y²X² + ‖θ‖²_p) T^{1/2} n^{1/2 - 1/max(q,p)}`.
pub fn aar_bound_eq2<T: Scalar>(
    horizon: usize,
    x_bound: T,
    y_bound: T,
    dim: usize,
    p: T,
    theta_p_sq: T,
) -> Result<(T, T)> {
    check_steps(horizon, dim)?;
    check_nonneg("X", x_bound)?;
    check_nonneg("Y", y_bound)?;
    check_nonneg("theta_p_sq", theta_p_sq)?;
    let q = dual_exponent(p)?;
    let t = T::of_usize(horizon);
    let n = T::of_usize(dim);
    let ridge = (t * n.powf(T::one() - T::of(2.0) / q)).sqrt();
    let exponent = T::of(0.5) - T::one() / q.max(p);
    let regret = (y_bound * y_bound * x_bound * x_bound + theta_p_sq) * t.sqrt() * n.powf(exponent);
    Ok((ridge, regret))
}

/// The logarithmic variant for `θ ∈ ℓ_p^n`:
/// `a‖θ‖²_p + Y²n ln(TX²/a + 1)` when `q ≥ 2`, and
/// `a n^{1/2-1/p}‖θ‖²_p + Y²n ln(TX²/a + 1)` when `q < 2`.
pub fn aar_bound_remark<T: Scalar>(
    horizon: usize,
    x_bound: T,
    y_bound: T,
    dim: usize,
    p: T,
    ridge: T,
    theta_p_sq: T,
) -> Result<T> {
    check_exponent(p)?;
    let q = dual_exponent(p)?;
    let log_part = aar_bound_eq1(horizon, x_bound, y_bound, ridge, dim, T::zero())?;
    check_nonneg("theta_p_sq", theta_p_sq)?;
    let norm_part = if q >= T::of(2.0) {
        ridge * theta_p_sq
    } else {
        ridge * T::of_usize(dim).powf(T::of(0.5) - T::one() / p) * theta_p_sq
    };
    Ok(norm_part + log_part)
}
