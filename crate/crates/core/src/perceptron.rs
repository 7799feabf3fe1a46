//! Second-order Perceptron on Lewis-embedded evaluation functionals.
//!
//! Inputs in a Sobolev space are mapped to their dual signals, embedded into
//! `ℓ_2^n` by the Lewis basis of those signals, and classified by
//! `sign[(Σ_M y_i r_i)' (aI + Σ_M r_i r_i')^{-1} r_t]` where `M` holds the
//! mistaken trials so far. `sign(0) = +1`.

use nalgebra::{DMatrix, DVector};
use rustfft::FftNum;

use crate::error::{check_len, invalid, Error, Result};
use crate::lattice::dual_exponent;
use crate::lewis::{LewisBasis, LewisOptions};
use crate::linalg::cholesky;
use crate::sobolev::{evaluation_constant, sobolev_norm, BandLimited, BesselTransform, DomainGrid, SobolevParams};
use crate::Scalar;

fn check_label<T: Scalar>(y: T) -> Result<T> {
    if y == T::one() || y == -T::one() {
        Ok(y)
    } else {
        Err(Error::InvalidLabel(y.as_f64()))
    }
}

fn sign<T: Scalar>(v: T) -> T {
    if v < T::zero() {
        -T::one()
    } else {
        T::one()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState<T: Scalar> {
    mistakes: Vec<usize>,
    accumulator: DMatrix<T>,
    vote: DVector<T>,
    a: T,
}

impl<T: Scalar> ClassifierState<T> {
    pub fn new(dim: usize, a: T) -> Result<Self> {
        if !(a > T::zero()) || !a.is_finite() {
            return Err(invalid("a", format!("must be finite and positive, got {a}")));
        }
        Ok(Self {
            mistakes: Vec::new(),
            accumulator: DMatrix::identity(dim, dim) * a,
            vote: DVector::zeros(dim),
            a,
        })
    }

    pub fn dim(&self) -> usize {
        self.vote.len()
    }

    pub fn a(&self) -> T {
        self.a
    }

    pub fn mistakes(&self) -> &[usize] {
        &self.mistakes
    }

    pub fn accumulator(&self) -> &DMatrix<T> {
        &self.accumulator
    }

    pub fn vote(&self) -> &DVector<T> {
        &self.vote
    }

    /// `v' A^{-1} r_t` before taking the sign.
    pub fn score(&self, r: &[T]) -> Result<T> {
        check_len(self.dim(), r.len())?;
        if self.mistakes.is_empty() {
            return Ok(T::zero());
        }
        let x = cholesky(self.accumulator.clone())?.solve(&DVector::from_column_slice(r));
        Ok(self.vote.dot(&x))
    }

    pub fn predict(&self, r: &[T]) -> Result<T> {
        self.score(r).map(sign)
    }

    /// Records trial `t` as a mistake when `predicted ≠ y`.
    pub fn update(mut self, t: usize, r: &[T], y: T, predicted: T) -> Result<Self> {
        check_len(self.dim(), r.len())?;
        let y = check_label(y)?;
        check_label(predicted)?;
        if predicted == y {
            return Ok(self);
        }
        let r = DVector::from_column_slice(r);
        self.accumulator.ger(T::one(), &r, &r, T::one());
        self.vote.axpy(y, &r, T::one());
        self.mistakes.push(t);
        Ok(self)
    }
}

/// `max{0, γ - y f(x)}`.
pub fn hinge_loss<T: Scalar>(f_value: T, y: T, gamma: T) -> Result<T> {
    if !(gamma > T::zero()) {
        return Err(invalid("gamma", format!("must be positive, got {gamma}")));
    }
    Ok((gamma - y * f_value).max(T::zero()))
}

/// Inputs of the mistake bound for one comparator `f`.
#[derive(Debug, Clone, PartialEq)]
pub struct MistakeBoundInputs<T> {
    pub gamma: T,
    /// `‖f‖²_{W_p^s}`.
    pub f_norm_sq: T,
    /// `T^{1/2 - 1/p}`.
    pub rank_term: T,
    pub a: T,
    /// `f(x_i)` for the mistaken trials.
    pub f_values_on_mistakes: Vec<T>,
    pub eval_const: T,
    /// `Σ_t D_γ(f, (x_t, y_t))` over the whole sequence.
    pub hinge_total: T,
}

/// `R²/(2γ²) + D/γ + (R/γ) √(D/γ + R²/(4γ²))` with
/// `R² = c² (T^{1/2-1/p} ‖f‖² + (1/a) Σ_M f(x_i)²)`.
pub fn mistake_bound<T: Scalar>(inputs: &MistakeBoundInputs<T>) -> Result<T> {
    let MistakeBoundInputs { gamma, f_norm_sq, rank_term, a, eval_const, hinge_total, .. } = *inputs;
    if !(gamma > T::zero()) {
        return Err(invalid("gamma", "must be positive"));
    }
    if !(a > T::zero()) {
        return Err(invalid("a", "must be positive"));
    }
    for (name, v) in [("f_norm_sq", f_norm_sq), ("rank_term", rank_term), ("hinge_total", hinge_total), ("c_B", eval_const)] {
        if !(v >= T::zero()) || !v.is_finite() {
            return Err(invalid(name, format!("must be finite and non-negative, got {v}")));
        }
    }
    let on_mistakes = inputs.f_values_on_mistakes.iter().fold(T::zero(), |acc, v| acc + *v * *v);
    let r_sq = eval_const * eval_const * (rank_term * f_norm_sq + on_mistakes / a);
    let r = r_sq.sqrt();
    let g_sq = gamma * gamma;
    let d = hinge_total / gamma;
    Ok(r_sq / (T::of(2.0) * g_sq) + d + r / gamma * (d + r_sq / (T::of(4.0) * g_sq)).sqrt())
}

/// Runs the classifier over pre-embedded vectors, one row per trial.
pub fn sop_run<T: Scalar>(features: &DMatrix<T>, labels: &[T], a: T) -> Result<(Vec<T>, ClassifierState<T>)> {
    check_len(features.nrows(), labels.len())?;
    let mut state = ClassifierState::new(features.ncols(), a)?;
    let mut predictions = Vec::with_capacity(labels.len());
    for (t, y) in labels.iter().enumerate() {
        let r: Vec<T> = features.row(t).iter().copied().collect();
        let guess = state.predict(&r)?;
        state = state.update(t, &r, *y, guess)?;
        predictions.push(guess);
    }
    Ok((predictions, state))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparatorBound<T> {
    pub f_norm_sq: T,
    pub hinge_total: T,
    pub bound: T,
}

#[derive(Debug, Clone)]
pub struct ClassifyOutcome<T: Scalar> {
    pub predictions: Vec<T>,
    pub mistake_indices: Vec<usize>,
    pub rank: usize,
    pub eval_const: T,
    pub bounds: Vec<ComparatorBound<T>>,
    pub basis: LewisBasis<T>,
}

impl<T: Scalar> ClassifyOutcome<T> {
    pub fn mistakes(&self) -> usize {
        self.mistake_indices.len()
    }
}

/// Dual signals of the points, their Lewis features, then the second-order
/// Perceptron. The bound is evaluated for every comparator in `comparators`.
#[allow(clippy::too_many_arguments)]
pub fn classify_run<T: Scalar + FftNum>(
    points: &[Vec<T>],
    labels: &[T],
    grid: &DomainGrid<T>,
    params: &SobolevParams<T>,
    gamma: T,
    a: T,
    comparators: &[BandLimited<T>],
) -> Result<ClassifyOutcome<T>> {
    params.validate()?;
    check_len(points.len(), labels.len())?;
    labels.iter().try_for_each(|y| check_label(*y).map(|_| ()))?;
    if !(gamma > T::zero()) {
        return Err(invalid("gamma", "must be positive"));
    }
    let transform = BesselTransform::new(grid, params.s)?;
    let mut nodes = Vec::with_capacity(points.len());
    let mut signals = Vec::with_capacity(points.len());
    for point in points {
        let (node, _) = grid.snap(point)?;
        nodes.push(node);
        signals.push(transform.dual_signal(node)?);
    }
    let basis = LewisBasis::build(&signals, dual_exponent(params.p)?, &LewisOptions::default())?;
    let (predictions, state) = sop_run(&basis.features(), labels, a)?;
    let eval_const = evaluation_constant(grid, params)?;
    let horizon = T::of_usize(points.len());
    let rank_term = horizon.powf(T::of(0.5) - T::one() / params.p);

    let mut bounds = Vec::with_capacity(comparators.len());
    for f in comparators {
        let sampled = f.sample(grid)?;
        let values: Vec<T> = nodes.iter().map(|&n| sampled.values()[n]).collect();
        let f_norm = sobolev_norm(&sampled, grid, params)?;
        let hinge_total = values
            .iter()
            .zip(labels)
            .try_fold(T::zero(), |acc, (v, y)| Ok::<_, Error>(acc + hinge_loss(*v, *y, gamma)?))?;
        let inputs = MistakeBoundInputs {
            gamma,
            f_norm_sq: f_norm * f_norm,
            rank_term,
            a,
            f_values_on_mistakes: state.mistakes().iter().map(|&i| values[i]).collect(),
            eval_const,
            hinge_total,
        };
        bounds.push(ComparatorBound { f_norm_sq: inputs.f_norm_sq, hinge_total, bound: mistake_bound(&inputs)? });
    }
    Ok(ClassifyOutcome {
        predictions,
        mistake_indices: state.mistakes().to_vec(),
        rank: basis.rank(),
        eval_const,
        bounds,
        basis,
    })
}
