//! Kernelized AAR: predictions from a matrix of scalar products.
//!
//! `γ_T = (y_1, …, y_{T-1}, 0)(aI + K̃)^{-1} k̃(x_T)` where `k̃(x_T)` is the
//! last column of the `T×T` Gram matrix `K̃`.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_len, invalid, Error, Result};
use crate::linalg::{asymmetry, cholesky, log_det_spd, symmetrize};
use crate::Scalar;

/// Symmetric positive semi-definite matrix of pairwise scalar products.
#[derive(Debug, Clone, PartialEq)]
pub struct GramMatrix<T: Scalar> {
    entries: DMatrix<T>,
}

impl<T: Scalar> GramMatrix<T> {
    /// Validates symmetry and semi-definiteness. Eigenvalues in
    /// `[-1e-8‖K‖, 0)` are clipped to zero; anything more negative is an error.
    pub fn new(entries: DMatrix<T>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                found: entries.ncols(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("gram matrix"));
        }
        let mut entries = entries;
        let scale = entries.amax();
        let skew = asymmetry(&entries);
        if skew > T::of(1e-10) * scale {
            return Err(Error::NotSymmetric { asymmetry: skew.as_f64() });
        }
        symmetrize(&mut entries);
        if entries.nrows() == 0 || scale == T::zero() {
            return Ok(Self { entries });
        }

        let eig = entries.clone().symmetric_eigen();
        let spectral = eig.eigenvalues.amax();
        let min = eig.eigenvalues.iter().copied().reduce(|m, v| m.min(v)).unwrap_or(T::zero());
        if min < -T::of(1e-8) * spectral {
            return Err(Error::NotPositiveSemiDefinite { min_eigenvalue: min.as_f64() });
        }
        if min < T::zero() {
            let clipped = eig.eigenvalues.map(|l| l.max(T::zero()));
            let v = &eig.eigenvectors;
            entries = v * DMatrix::from_diagonal(&clipped) * v.transpose();
            symmetrize(&mut entries);
        }
        Ok(Self { entries })
    }

    /// `R R'` for a feature matrix with one row per signal; semi-definite by
    /// construction, so no spectral check is run.
    pub fn from_features(features: &DMatrix<T>) -> Self {
        let mut entries = features * features.transpose();
        symmetrize(&mut entries);
        Self { entries }
    }

    /// Wraps a matrix already known to be a symmetric semi-definite Gram matrix.
    pub(crate) fn from_symmetric_unchecked(entries: DMatrix<T>) -> Self {
        Self { entries }
    }

    /// Plain dot-product Gram matrix of coordinate vectors.
    pub fn dot_product(signals: &[Vec<T>]) -> Result<Self> {
        let Some(first) = signals.first() else {
            return Ok(Self { entries: DMatrix::zeros(0, 0) });
        };
        let dim = first.len();
        for s in signals {
            check_len(dim, s.len())?;
        }
        let rows = DMatrix::from_fn(signals.len(), dim, |i, j| signals[i][j]);
        Ok(Self::from_features(&rows))
    }

    pub fn size(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<T> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<T> {
        self.entries
    }

    /// Top-left `t×t` block: the products among the first `t` signals.
    pub fn leading(&self, t: usize) -> Self {
        Self {
            entries: self.entries.view((0, 0), (t, t)).into_owned(),
        }
    }

    /// The diagonal part only.
    pub fn diagonal(&self) -> Self {
        Self {
            entries: DMatrix::from_diagonal(&self.entries.diagonal()),
        }
    }

    pub fn max_diagonal(&self) -> T {
        self.entries.diagonal().iter().fold(T::zero(), |m, v| m.max(*v))
    }

    /// Same matrix with rows and columns reordered by `order`.
    pub fn permuted(&self, order: &[usize]) -> Result<Self> {
        check_len(self.size(), order.len())?;
        Ok(Self {
            entries: DMatrix::from_fn(order.len(), order.len(), |i, j| self.entries[(order[i], order[j])]),
        })
    }
}

fn check_ridge<T: Scalar>(a: T) -> Result<()> {
    if a > T::zero() && a.is_finite() {
        Ok(())
    } else {
        Err(invalid("a", "ridge parameter must be positive"))
    }
}

/// Single KAAR prediction. `labels` has one entry per row of `gram`, the last
/// of which must be zero (the outcome being predicted is unknown).
pub fn kaar_predict<T: Scalar>(gram: &GramMatrix<T>, labels: &[T], a: T) -> Result<T> {
    check_ridge(a)?;
    let t = gram.size();
    if t == 0 {
        return Err(invalid("gram", "at least one signal is required"));
    }
    check_len(t, labels.len())?;
    if labels[t - 1] != T::zero() {
        return Err(invalid("labels", "the entry for the current step must be zero"));
    }
    let mut m = gram.entries.clone();
    for i in 0..t {
        m[(i, i)] += a;
    }
    let k = gram.entries.column(t - 1).into_owned();
    let z = cholesky(m)?.solve(&k);
    Ok(DVector::from_column_slice(labels).dot(&z))
}

/// Semi-online KAAR: factorizes `aI + K̃` once for all `T` signals and serves
/// every step from the leading block of the Cholesky factor, which is the
/// factor of the leading block of the matrix.
#[derive(Debug, Clone)]
pub struct KaarPredictor<T: Scalar> {
    factor: DMatrix<T>,
    gram: DMatrix<T>,
}

impl<T: Scalar> KaarPredictor<T> {
    pub fn new(gram: &GramMatrix<T>, a: T) -> Result<Self> {
        check_ridge(a)?;
        let mut m = gram.entries.clone();
        for i in 0..m.nrows() {
            m[(i, i)] += a;
        }
        let factor = cholesky(m)?.unpack();
        Ok(Self { factor, gram: gram.entries.clone() })
    }

    pub fn horizon(&self) -> usize {
        self.gram.nrows()
    }

    /// Prediction at step `past.len() + 1` given the outcomes revealed so far.
    pub fn predict(&self, past: &[T]) -> Result<T> {
        let t = past.len() + 1;
        if t > self.horizon() {
            return Err(Error::DimensionMismatch { expected: self.horizon(), found: t });
        }
        if past.is_empty() {
            return Ok(T::zero());
        }
        // y'(L L')^{-1} k = (L^{-1} y)'(L^{-1} k)
        let l = self.factor.view((0, 0), (t, t));
        let k = self.gram.view((0, t - 1), (t, 1)).into_owned();
        let mut y = DMatrix::zeros(t, 1);
        for (i, v) in past.iter().enumerate() {
            y[(i, 0)] = *v;
        }
        let u = l.solve_lower_triangular(&y).ok_or(Error::NotPositiveDefinite)?;
        let v = l.solve_lower_triangular(&k).ok_or(Error::NotPositiveDefinite)?;
        Ok(u.dot(&v))
    }

    /// All `T` predictions for a fully revealed outcome sequence; prediction
    /// `t` only reads `outcomes[..t-1]`.
    pub fn predict_all(&self, outcomes: &[T]) -> Result<Vec<T>> {
        check_len(self.horizon(), outcomes.len())?;
        (0..outcomes.len()).map(|t| self.predict(&outcomes[..t])).collect()
    }
}

/// Regret term `a‖h‖²_H + Y² ln det(I + K̃/a)`.
pub fn kaar_bound<T: Scalar>(gram: &GramMatrix<T>, a: T, y_bound: T, h_norm_sq: T) -> Result<T> {
    check_ridge(a)?;
    if !(h_norm_sq >= T::zero()) {
        return Err(invalid("h_norm_sq", "squared norm must be non-negative"));
    }
    let n = gram.size();
    let m = DMatrix::identity(n, n) + &gram.entries / a;
    let ld = if n == 0 { T::zero() } else { log_det_spd(m)? };
    Ok(a * h_norm_sq + y_bound * y_bound * ld)
}

/// Relaxation `a‖h‖² + Y² T max_t ‖r_t‖² / a` obtained from Hadamard's
/// inequality and `ln(1 + x) ≤ x`.
pub fn kaar_simplified_bound<T: Scalar>(horizon: usize, max_diag: T, a: T, y_bound: T, h_norm_sq: T) -> Result<T> {
    check_ridge(a)?;
    if !(max_diag >= T::zero()) || !(h_norm_sq >= T::zero()) {
        return Err(invalid("max_diag", "diagonal bound and norm must be non-negative"));
    }
    Ok(a * h_norm_sq + y_bound * y_bound * T::of_usize(horizon) * max_diag / a)
}
