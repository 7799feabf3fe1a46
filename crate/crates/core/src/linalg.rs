//! Small dense helpers on top of nalgebra used by several modules.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::Scalar;

pub(crate) fn cholesky<T: Scalar>(m: DMatrix<T>) -> Result<Cholesky<T, Dyn>> {
    Cholesky::new(m).ok_or(Error::NotPositiveDefinite)
}

/// Largest absolute difference between `m` and its transpose.
pub(crate) fn asymmetry<T: Scalar>(m: &DMatrix<T>) -> T {
    let n = m.nrows();
    let mut worst = T::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            worst = worst.max((m[(i, j)] - m[(j, i)]).abs());
        }
    }
    worst
}

pub(crate) fn symmetrize<T: Scalar>(m: &mut DMatrix<T>) {
    let n = m.nrows();
    let half = T::of(0.5);
    for i in 0..n {
        for j in (i + 1)..n {
            let avg = (m[(i, j)] + m[(j, i)]) * half;
            m[(i, j)] = avg;
            m[(j, i)] = avg;
        }
    }
}

/// `G^{-1/2}` of a symmetric positive-definite matrix through its
/// eigendecomposition.
pub(crate) fn inv_sqrt_spd<T: Scalar>(g: &DMatrix<T>) -> Result<DMatrix<T>> {
    let eig = g.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().reduce(|m, v| m.min(v)).unwrap_or(T::zero());
    if !(min > T::zero()) {
        return Err(Error::NotPositiveSemiDefinite {
            min_eigenvalue: min.as_f64(),
        });
    }
    let scaled = DVector::from_iterator(
        eig.eigenvalues.len(),
        eig.eigenvalues.iter().map(|l| T::one() / l.sqrt()),
    );
    let v = &eig.eigenvectors;
    Ok(v * DMatrix::from_diagonal(&scaled) * v.transpose())
}

/// `ln det` of a symmetric positive-definite matrix from its Cholesky factor.
pub(crate) fn log_det_spd<T: Scalar>(m: DMatrix<T>) -> Result<T> {
    let chol = cholesky(m)?;
    let l = chol.l_dirty();
    let two = T::of(2.0);
    Ok((0..l.nrows()).fold(T::zero(), |acc, i| acc + two * l[(i, i)].ln()))
}

pub(crate) fn frobenius<T: Scalar>(m: &DMatrix<T>) -> T {
    m.iter().fold(T::zero(), |acc, v| acc + *v * *v).sqrt()
}
