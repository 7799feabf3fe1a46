//! Finite measure spaces, `L_p` norms and dual pairings.
//!
//! An `L_p(μ)` function is stored by its values on a finite weighted sample
//! space, so every integral is a weighted sum. Plain coordinate vectors of
//! `ℓ_p^n` are the special case of the counting measure (all weights one).

use std::sync::Arc;

use crate::error::{check_len, invalid, Error, Result};
use crate::Scalar;

/// Finite sample space `(Ω, μ)` with strictly positive point masses.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasureSpace<T> {
    weights: Vec<T>,
}

impl<T: Scalar> MeasureSpace<T> {
    pub fn new(weights: Vec<T>) -> Result<Self> {
        if weights.is_empty() {
            return Err(invalid("weights", "a measure space needs at least one point"));
        }
        if weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::NonFinite("measure weights"));
        }
        if weights.iter().any(|w| *w <= T::zero()) {
            return Err(invalid("weights", "all point masses must be strictly positive"));
        }
        Ok(Self { weights })
    }

    /// `m` points of equal mass `weight`.
    pub fn uniform(m: usize, weight: T) -> Result<Self> {
        Self::new(vec![weight; m])
    }

    /// Counting measure on `n` points: the coordinate space `ℓ_p^n`.
    pub fn counting(n: usize) -> Result<Self> {
        Self::uniform(n, T::one())
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn total_measure(&self) -> T {
        self.weights.iter().fold(T::zero(), |acc, w| acc + *w)
    }

    /// `∫ f dμ` for a function given by its point values.
    pub fn integrate(&self, values: &[T]) -> Result<T> {
        check_len(self.len(), values.len())?;
        Ok(self
            .weights
            .iter()
            .zip(values)
            .fold(T::zero(), |acc, (w, v)| acc + *w * *v))
    }

    fn same_as(self: &Arc<Self>, other: &Arc<Self>) -> bool {
        Arc::ptr_eq(self, other) || self.weights == other.weights
    }
}

/// A signal `x_t`: point values of a function on a [`MeasureSpace`].
#[derive(Debug, Clone, PartialEq)]
pub struct Signal<T> {
    values: Vec<T>,
    space: Arc<MeasureSpace<T>>,
}

impl<T: Scalar> Signal<T> {
    pub fn new(values: Vec<T>, space: Arc<MeasureSpace<T>>) -> Result<Self> {
        check_len(space.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("signal values"));
        }
        Ok(Self { values, space })
    }

    /// Coordinate vector in `ℓ_p^n` (counting measure).
    pub fn coordinates(values: Vec<T>) -> Result<Self> {
        let space = Arc::new(MeasureSpace::counting(values.len())?);
        Self::new(values, space)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn space(&self) -> &Arc<MeasureSpace<T>> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn same_space(&self, other: &Self) -> bool {
        self.space.same_as(&other.space)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|v| *v * factor).collect(),
            space: Arc::clone(&self.space),
        }
    }

    pub fn lp_norm(&self, p: T) -> Result<T> {
        lp_norm(self, p)
    }
}

/// A continuous linear functional on `L_p(μ)`, represented by its density
/// `w ∈ L_{p'}(μ)` so that `f(x) = ∫ w x dμ`.
#[derive(Debug, Clone, PartialEq)]
pub struct DualVector<T> {
    values: Vec<T>,
    exponent: T,
    space: Arc<MeasureSpace<T>>,
}

impl<T: Scalar> DualVector<T> {
    /// `exponent` is the dual exponent `p'` whose norm measures the functional.
    pub fn new(values: Vec<T>, exponent: T, space: Arc<MeasureSpace<T>>) -> Result<Self> {
        check_len(space.len(), values.len())?;
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("dual vector values"));
        }
        if !(exponent > T::one()) || !exponent.is_finite() {
            return Err(invalid("exponent", "dual exponent must lie in (1, ∞)"));
        }
        Ok(Self { values, exponent, space })
    }

    /// The functional dual to `L_p` for a signal exponent `p`.
    pub fn for_signal_exponent(values: Vec<T>, p: T, space: Arc<MeasureSpace<T>>) -> Result<Self> {
        Self::new(values, dual_exponent(p)?, space)
    }

    pub fn zero(exponent: T, space: Arc<MeasureSpace<T>>) -> Result<Self> {
        Self::new(vec![T::zero(); space.len()], exponent, space)
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn exponent(&self) -> T {
        self.exponent
    }

    pub fn space(&self) -> &Arc<MeasureSpace<T>> {
        &self.space
    }

    /// `‖w‖_{L_{p'}(μ)}`, the operator norm of the functional on `L_p(μ)`.
    pub fn dual_norm(&self) -> T {
        weighted_lp_norm(&self.values, self.space.weights(), self.exponent)
    }

    pub fn scaled(&self, factor: T) -> Self {
        Self {
            values: self.values.iter().map(|v| *v * factor).collect(),
            exponent: self.exponent,
            space: Arc::clone(&self.space),
        }
    }

    /// Evaluates the functional on a signal.
    pub fn apply(&self, x: &Signal<T>) -> Result<T> {
        pairing(self, x)
    }
}

/// Validated game parameters shared by the regression protocols.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GameConfig<T> {
    /// Lattice exponent, `1 < p < ∞`.
    pub p: T,
    /// Outcome bound: outcomes are expected in `[-Y, Y]`.
    pub y_bound: T,
    pub horizon: usize,
    /// Ridge parameter override; derived from the horizon when absent.
    pub ridge: Option<T>,
}

impl<T: Scalar> GameConfig<T> {
    pub fn new(p: T, y_bound: T, horizon: usize, ridge: Option<T>) -> Result<Self> {
        let config = Self { p, y_bound, horizon, ridge };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        check_exponent(self.p)?;
        if !(self.y_bound > T::zero()) || !self.y_bound.is_finite() {
            return Err(invalid("y_bound", "outcome bound must be positive and finite"));
        }
        if self.horizon == 0 {
            return Err(invalid("horizon", "at least one step is required"));
        }
        if let Some(a) = self.ridge {
            if !(a > T::zero()) || !a.is_finite() {
                return Err(invalid("ridge", "ridge parameter must be positive"));
            }
        }
        Ok(())
    }
}

/// Rejects exponents outside the open interval `(1, ∞)`.
pub fn check_exponent<T: Scalar>(p: T) -> Result<()> {
    if p.is_finite() && p > T::one() {
        Ok(())
    } else {
        Err(invalid("p", format!("exponent must lie in (1, ∞), got {p}")))
    }
}

/// `(Σ_k μ_k |v_k|^p)^{1/p}`, evaluated with max-scaling so large exponents
/// do not overflow.
pub(crate) fn weighted_lp_norm<T: Scalar>(values: &[T], weights: &[T], p: T) -> T {
    let peak = values.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    if peak == T::zero() {
        return T::zero();
    }
    let sum = values
        .iter()
        .zip(weights)
        .fold(T::zero(), |acc, (v, w)| acc + *w * (v.abs() / peak).powf(p));
    peak * sum.powf(T::one() / p)
}

/// `L_p(μ)` norm of a signal (the `ℓ_p^n` norm in coordinate mode).
pub fn lp_norm<T: Scalar>(x: &Signal<T>, p: T) -> Result<T> {
    if !(p >= T::one()) || !p.is_finite() {
        return Err(invalid("p", format!("norm exponent must be finite and ≥ 1, got {p}")));
    }
    Ok(weighted_lp_norm(&x.values, x.space.weights(), p))
}

/// `p' = p / (p - 1)`, so that `1/p + 1/p' = 1`.
pub fn dual_exponent<T: Scalar>(p: T) -> Result<T> {
    check_exponent(p)?;
    Ok(p / (p - T::one()))
}

/// Smallest `c` with `‖a‖_2 ≤ c ‖a‖_q` on `R^n`: one for `q ≤ 2`,
/// `n^{1/2 - 1/q}` for `q ≥ 2`.
pub fn norm_equiv_factor<T: Scalar>(n: usize, q: T) -> Result<T> {
    if n == 0 {
        return Err(invalid("n", "dimension must be positive"));
    }
    if !(q >= T::one()) || !q.is_finite() {
        return Err(invalid("q", format!("exponent must be finite and ≥ 1, got {q}")));
    }
    let two = T::of(2.0);
    if q <= two {
        Ok(T::one())
    } else {
        Ok(T::of_usize(n).powf(T::of(0.5) - T::one() / q))
    }
}

/// `f(x) = Σ_k μ_k w_k v_k`.
pub fn pairing<T: Scalar>(f: &DualVector<T>, x: &Signal<T>) -> Result<T> {
    if !f.space.same_as(&x.space) {
        return Err(Error::SpaceMismatch);
    }
    Ok(f
        .values
        .iter()
        .zip(&x.values)
        .zip(f.space.weights())
        .fold(T::zero(), |acc, ((w, v), mu)| acc + *mu * *w * *v))
}
