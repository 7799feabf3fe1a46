//! Lewis bases of finite-dimensional subspaces of `L_p(μ)`.
//!
//! Given signals spanning an `n`-dimensional subspace `Z`, we look for
//! `γ_i = Σ_j c_ij x_j` maximizing `|det C|` subject to
//! `‖(Σ_i γ_i²)^{1/2}‖_p ≤ 1`. Writing `γ_Z = (Σ_i γ_i²)^{1/2}`, stationarity
//! of `ln|det C|` under the active constraint gives
//!
//! ```text
//! n ∫ γ_i γ_j γ_Z^{p-2} dμ = δ_ij
//! ```
//!
//! so the optimum whitens the selected signals in the `γ_Z^{p-2}`-weighted
//! `L_2` product. The weight exponent is `p - 2`; with `p' - 2` the integral
//! kernel and the coefficient kernel disagree off `p = 2` (see the
//! `integral_kernel_matches_coefficient_kernel` test).
//!
//! The solver is the fixed-point iteration `h ← γ_Z^{p-2}`,
//! `C ← n^{-1/2} G_h^{-1/2}` followed by a rescale onto the constraint. It is a
//! contraction for `p < 4`; beyond that geometric damping of the weights is
//! switched on when the residual stops shrinking.

use std::sync::Arc;

use nalgebra::{Cholesky, DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::kaar::GramMatrix;
use crate::lattice::{check_exponent, weighted_lp_norm, MeasureSpace, Signal};
use crate::linalg::{frobenius, inv_sqrt_spd};
use crate::Scalar;

/// Relative singular-value cutoff below which a direction counts as dependent.
pub const RANK_TOLERANCE: f64 = 1e-10;

/// Tuning knobs for [`solve_lewis`] and [`LewisBasis::build`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LewisOptions<T> {
    /// Target Frobenius residual of the biorthogonality identity.
    pub tolerance: T,
    pub max_iterations: usize,
    pub rank_tolerance: T,
    /// Damping factor applied once the undamped iteration stalls.
    pub damping: T,
}

impl<T: Scalar> Default for LewisOptions<T> {
    fn default() -> Self {
        Self {
            tolerance: T::of(1e-10),
            max_iterations: 500,
            rank_tolerance: T::of(RANK_TOLERANCE),
            damping: T::of(0.5),
        }
    }
}

/// Result of Step 1: a maximal independent subset and the coordinates of
/// every signal in it.
#[derive(Debug, Clone, PartialEq)]
pub struct IndependentSubset<T: Scalar> {
    /// Selected signal indices, in first-occurrence order.
    pub indices: Vec<usize>,
    /// `T×n`, row `s` holds `α_s` with `x_s = Σ_i α_si x_{r_i}`.
    pub alphas: DMatrix<T>,
    /// Largest relative reconstruction residual `‖x_s - Σ α_si x_{r_i}‖ / ‖x_s‖`.
    pub max_residual: T,
}

impl<T: Scalar> IndependentSubset<T> {
    pub fn rank(&self) -> usize {
        self.indices.len()
    }
}

fn check_common_space<T: Scalar>(signals: &[Signal<T>]) -> Result<Arc<MeasureSpace<T>>> {
    let first = signals.first().ok_or_else(|| invalid("signals", "at least one signal is required"))?;
    if signals.iter().any(|s| !s.same_space(first)) {
        return Err(Error::SpaceMismatch);
    }
    Ok(Arc::clone(first.space()))
}

fn weighted_dot<T: Scalar>(a: &[T], b: &[T], mu: &[T]) -> T {
    a.iter()
        .zip(b)
        .zip(mu)
        .fold(T::zero(), |acc, ((x, y), w)| acc + *w * *x * *y)
}

/// Greedy Gram–Schmidt in the `L_2(μ)` product (with one re-orthogonalization
/// pass), keeping a signal when its residual exceeds `tol` times the largest
/// signal norm.
pub fn max_independent_subset<T: Scalar>(signals: &[Signal<T>], tol: T) -> Result<IndependentSubset<T>> {
    let space = check_common_space(signals)?;
    let mu = space.weights();
    let norms: Vec<T> = signals.iter().map(|s| weighted_dot(s.values(), s.values(), mu).sqrt()).collect();
    let largest = norms.iter().fold(T::zero(), |m, v| m.max(*v));
    if largest == T::zero() {
        return Err(Error::ZeroRank);
    }
    let cutoff = tol * largest;

    let mut basis: Vec<Vec<T>> = Vec::new();
    let mut factor_rows: Vec<Vec<T>> = Vec::new();
    let mut indices = Vec::new();
    for (s, signal) in signals.iter().enumerate() {
        let mut residual = signal.values().to_vec();
        let mut coeffs = vec![T::zero(); basis.len()];
        for _pass in 0..2 {
            for (k, q) in basis.iter().enumerate() {
                let c = weighted_dot(&residual, q, mu);
                coeffs[k] += c;
                for (r, qv) in residual.iter_mut().zip(q) {
                    *r -= c * *qv;
                }
            }
        }
        let norm = weighted_dot(&residual, &residual, mu).sqrt();
        if norm > cutoff {
            residual.iter_mut().for_each(|r| *r /= norm);
            coeffs.push(norm);
            basis.push(residual);
            factor_rows.push(coeffs);
            indices.push(s);
        }
    }

    // x_{r_i} = Σ_{k≤i} L_ik q_k with L lower triangular.
    let n = indices.len();
    let lower = DMatrix::from_fn(n, n, |i, k| if k <= i { factor_rows[i][k] } else { T::zero() });
    let upper = lower.transpose();
    let mut alphas = DMatrix::zeros(signals.len(), n);
    let mut max_residual = T::zero();
    for (s, signal) in signals.iter().enumerate() {
        let alpha = if let Some(pos) = indices.iter().position(|&i| i == s) {
            let mut e = DVector::zeros(n);
            e[pos] = T::one();
            e
        } else {
            let c = DVector::from_iterator(n, basis.iter().map(|q| weighted_dot(signal.values(), q, mu)));
            upper.solve_upper_triangular(&c).ok_or(Error::NotPositiveDefinite)?
        };
        let mut diff = signal.values().to_vec();
        for (i, &r) in indices.iter().enumerate() {
            for (d, v) in diff.iter_mut().zip(signals[r].values()) {
                *d -= alpha[i] * *v;
            }
        }
        if norms[s] > T::zero() {
            max_residual = max_residual.max(weighted_dot(&diff, &diff, mu).sqrt() / norms[s]);
        }
        alphas.row_mut(s).copy_from(&alpha.transpose());
    }
    Ok(IndependentSubset { indices, alphas, max_residual })
}

/// Step 2 output for a linearly independent family.
#[derive(Debug, Clone, PartialEq)]
pub struct LewisSolution<T: Scalar> {
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    /// `γ_Z` at every sample point.
    pub gamma_z: Vec<T>,
    /// `γ_Z^{p-2}` at every sample point (clamped near zeros when `p < 2`).
    pub weight: Vec<T>,
    pub residual: T,
    pub iterations: usize,
}

struct Sweep<T: Scalar> {
    c: DMatrix<T>,
    gamma: DMatrix<T>,
    gamma_z: Vec<T>,
    weight: Vec<T>,
    residual: T,
}

fn point_weights<T: Scalar>(gamma_z: &[T], p: T) -> Vec<T> {
    let exponent = p - T::of(2.0);
    let floor = if p < T::of(2.0) {
        T::of(1e-12) * gamma_z.iter().fold(T::zero(), |m, v| m.max(*v))
    } else {
        T::zero()
    };
    gamma_z.iter().map(|g| g.max(floor).powf(exponent)).collect()
}

fn biorthogonality_residual<T: Scalar>(gamma: &DMatrix<T>, weight: &[T], mu: &[T]) -> T {
    let n = gamma.nrows();
    let scaled = DMatrix::from_fn(n, gamma.ncols(), |i, k| gamma[(i, k)] * mu[k] * weight[k]);
    let m = (&scaled * gamma.transpose()) * T::of_usize(n) - DMatrix::identity(n, n);
    frobenius(&m)
}

fn sweep<T: Scalar>(x: &DMatrix<T>, mu: &[T], h: &[T], p: T) -> Result<Sweep<T>> {
    let n = x.nrows();
    let weighted = DMatrix::from_fn(n, x.ncols(), |i, k| x[(i, k)] * mu[k] * h[k]);
    let g = &weighted * x.transpose();
    let mut c = inv_sqrt_spd(&g)? / T::of_usize(n).sqrt();
    let mut gamma = &c * x;
    let raw_z: Vec<T> = gamma.column_iter().map(|col| col.norm()).collect();
    let scale = weighted_lp_norm(&raw_z, mu, p);
    if !(scale > T::zero()) || !scale.is_finite() {
        return Err(Error::NonFinite("lewis normalization"));
    }
    c /= scale;
    gamma /= scale;
    let gamma_z: Vec<T> = raw_z.iter().map(|z| *z / scale).collect();
    let weight = point_weights(&gamma_z, p);
    let residual = biorthogonality_residual(&gamma, &weight, mu);
    Ok(Sweep { c, gamma, gamma_z, weight, residual })
}

/// Solves the determinant-maximization problem for linearly independent
/// signals by the weighted-whitening fixed point, starting from the `p = 2`
/// solution.
///
/// The iteration runs on `Q = L^{-1} X`, where `L L'` is the `L_2(μ)` Gram
/// of the signals, so nearly collinear signals do not put a rounding floor
/// under the residual. The weights and `γ_Z` match the iteration on `X`
/// itself (the two differ by a left orthogonal factor), and `C = C_Q L^{-1}`.
pub fn solve_lewis<T: Scalar>(selected: &[Signal<T>], p: T, options: &LewisOptions<T>) -> Result<LewisSolution<T>> {
    check_exponent(p)?;
    let space = check_common_space(selected)?;
    let mu = space.weights();
    let x = DMatrix::from_fn(selected.len(), space.len(), |i, k| selected[i].values()[k]);
    let weighted = DMatrix::from_fn(x.nrows(), x.ncols(), |i, k| x[(i, k)] * mu[k]);
    let lower = Cholesky::new(&weighted * x.transpose()).ok_or(Error::NotPositiveDefinite)?.l();
    let q = lower.solve_lower_triangular(&x).ok_or(Error::NotPositiveDefinite)?;

    let mut h = vec![T::one(); space.len()];
    let mut theta = T::one();
    let mut previous = T::max_value().unwrap_or_else(|| T::of(f64::MAX));
    let mut since_change = 0usize;
    let mut last_residual = previous;

    for iteration in 1..=options.max_iterations {
        let current = sweep(&q, mu, &h, p)?;
        last_residual = current.residual;
        if current.residual <= options.tolerance {
            let c = lower
                .transpose()
                .solve_upper_triangular(&current.c.transpose())
                .ok_or(Error::NotPositiveDefinite)?
                .transpose();
            let d = &lower * current.c.try_inverse().ok_or(Error::NotPositiveDefinite)?;
            return Ok(LewisSolution {
                c,
                d,
                gamma_z: current.gamma_z,
                weight: current.weight,
                residual: current.residual,
                iterations: iteration,
            });
        }
        debug_assert_eq!(current.gamma.ncols(), h.len());

        since_change += 1;
        if current.residual > T::of(0.9) * previous && since_change >= 3 && theta > T::of(0.0625) {
            theta *= options.damping;
            since_change = 0;
            log::debug!("lewis iteration {iteration}: residual stalled at {}, damping to {theta}", current.residual);
        }
        previous = current.residual;

        if theta == T::one() {
            h = current.weight;
        } else {
            let keep = T::one() - theta;
            h = h
                .iter()
                .zip(&current.weight)
                .map(|(old, new)| (keep * old.ln() + theta * new.ln()).exp())
                .collect();
        }
    }
    Err(Error::NoConvergence {
        iterations: options.max_iterations,
        residual: last_residual.as_f64(),
    })
}

/// Steps 1 and 2 for a full signal sequence, together with the induced
/// embedding of the span into `ℓ_2^n`.
#[derive(Debug, Clone, PartialEq)]
pub struct LewisBasis<T: Scalar> {
    pub indices: Vec<usize>,
    pub c: DMatrix<T>,
    pub d: DMatrix<T>,
    pub gamma_z: Signal<T>,
    pub weight: Signal<T>,
    /// `T×n` coordinates of every signal in the selected subset.
    pub alphas: DMatrix<T>,
    pub p: T,
    pub residual: T,
    pub iterations: usize,
    /// `T×M` sample values of all signals.
    samples: DMatrix<T>,
    space: Arc<MeasureSpace<T>>,
    /// Factor `s ≥ 1` dividing the coefficient map so that it does not expand
    /// any signal's norm.
    operator_scale: T,
}

impl<T: Scalar> LewisBasis<T> {
    pub fn build(signals: &[Signal<T>], p: T, options: &LewisOptions<T>) -> Result<Self> {
        check_exponent(p)?;
        let space = check_common_space(signals)?;
        let subset = max_independent_subset(signals, options.rank_tolerance)?;
        let selected: Vec<Signal<T>> = subset.indices.iter().map(|&i| signals[i].clone()).collect();
        let solution = solve_lewis(&selected, p, options)?;
        let samples = DMatrix::from_fn(signals.len(), space.len(), |s, k| signals[s].values()[k]);

        let mut basis = Self {
            indices: subset.indices,
            c: solution.c,
            d: solution.d,
            gamma_z: Signal::new(solution.gamma_z, Arc::clone(&space))?,
            weight: Signal::new(solution.weight, Arc::clone(&space))?,
            alphas: subset.alphas,
            p,
            residual: solution.residual,
            iterations: solution.iterations,
            samples,
            space,
            operator_scale: T::one(),
        };
        basis.operator_scale = basis.expansion_ratio(signals)?;
        Ok(basis)
    }

    fn expansion_ratio(&self, signals: &[Signal<T>]) -> Result<T> {
        let raw = self.raw_features();
        let mut worst = T::zero();
        for (s, signal) in signals.iter().enumerate() {
            let norm = signal.lp_norm(self.p)?;
            if norm > T::zero() {
                worst = worst.max(raw.row(s).norm() / norm);
            }
        }
        Ok(if worst * worst > T::one() + T::of(1e-8) { worst } else { T::one() })
    }

    pub fn rank(&self) -> usize {
        self.indices.len()
    }

    pub fn horizon(&self) -> usize {
        self.alphas.nrows()
    }

    pub fn space(&self) -> &Arc<MeasureSpace<T>> {
        &self.space
    }

    pub fn operator_scale(&self) -> T {
        self.operator_scale
    }

    /// `|det C|` under the active constraint.
    pub fn determinant(&self) -> T {
        self.c.determinant().abs()
    }

    /// Rows `α_s D / √n`: the coordinates whose products give the coefficient
    /// kernel.
    fn raw_features(&self) -> DMatrix<T> {
        (&self.alphas * &self.d) / T::of_usize(self.rank()).sqrt()
    }

    /// Images `r_s = U x_s ∈ ℓ_2^n` of every signal under the normalized
    /// embedding (`T×n`, one row per signal).
    pub fn features(&self) -> DMatrix<T> {
        self.raw_features() / self.operator_scale
    }

    /// `K̃_sl = (1/n) Σ_{i,j} α_si α_lj Σ_k d_ik d_jk`.
    pub fn blaar_kernel(&self) -> GramMatrix<T> {
        GramMatrix::from_features(&self.raw_features())
    }

    /// `K̃` after the operator normalization; this is what BLAAR feeds to KAAR.
    pub fn normalized_kernel(&self) -> GramMatrix<T> {
        GramMatrix::from_features(&self.features())
    }

    /// `k_sl = ∫ x_s x_l γ_Z^{p-2} dμ`, an independent route to the same
    /// kernel at the Lewis optimum.
    pub fn integral_kernel(&self) -> GramMatrix<T> {
        let mu = self.space.weights();
        let w = self.weight.values();
        let weighted = DMatrix::from_fn(self.samples.nrows(), self.samples.ncols(), |s, k| {
            self.samples[(s, k)] * mu[k] * w[k]
        });
        let mut k = &weighted * self.samples.transpose();
        crate::linalg::symmetrize(&mut k);
        GramMatrix::from_symmetric_unchecked(k)
    }

    /// `‖n Γ W Γ' - I‖_F` recomputed from the stored basis.
    pub fn biorthogonality_residual(&self) -> T {
        let selected = DMatrix::from_fn(self.rank(), self.samples.ncols(), |i, k| self.samples[(self.indices[i], k)]);
        let gamma = &self.c * selected;
        biorthogonality_residual(&gamma, self.weight.values(), self.space.weights())
    }

    /// Point values of `Σ_i b_i x_{r_i}`.
    pub fn combination(&self, coefficients: &[T]) -> Result<Signal<T>> {
        crate::error::check_len(self.rank(), coefficients.len())?;
        let mut values = vec![T::zero(); self.space.len()];
        for (b, &r) in coefficients.iter().zip(&self.indices) {
            for (v, x) in values.iter_mut().zip(self.samples.row(r).iter()) {
                *v += *b * *x;
            }
        }
        Signal::new(values, Arc::clone(&self.space))
    }

    /// `U(Σ_i b_i x_{r_i}) = b D / (√n s)`.
    pub fn embed(&self, coefficients: &[T]) -> Result<DVector<T>> {
        crate::error::check_len(self.rank(), coefficients.len())?;
        let b = DMatrix::from_row_slice(1, self.rank(), coefficients);
        let row = (b * &self.d) / (T::of_usize(self.rank()).sqrt() * self.operator_scale);
        Ok(DVector::from_iterator(self.rank(), row.iter().copied()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn coords(rows: &[&[f64]]) -> Vec<Signal<f64>> {
        let space = Arc::new(MeasureSpace::counting(rows[0].len()).unwrap());
        rows.iter().map(|r| Signal::new(r.to_vec(), space.clone()).unwrap()).collect()
    }

    fn random_signals(rng: &mut ChaCha8Rng, count: usize, m: usize) -> Vec<Signal<f64>> {
        let weights: Vec<f64> = (0..m).map(|_| rng.random_range(0.2..1.5)).collect();
        let space = Arc::new(MeasureSpace::new(weights).unwrap());
        (0..count)
            .map(|_| Signal::new((0..m).map(|_| rng.random_range(-1.0..1.0)).collect(), space.clone()).unwrap())
            .collect()
    }

    #[test]
    fn independent_subset_examples() {
        let sub = max_independent_subset(&coords(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]), 1e-10).unwrap();
        assert_eq!(sub.indices, vec![0, 1]);
        assert_relative_eq!(sub.alphas[(2, 0)], 1.0, epsilon = 1e-14);
        assert_relative_eq!(sub.alphas[(2, 1)], 1.0, epsilon = 1e-14);

        let sub = max_independent_subset(&coords(&[&[2.0, 0.0]]), 1e-10).unwrap();
        assert_eq!(sub.indices, vec![0]);
        assert_eq!(sub.alphas[(0, 0)], 1.0);

        let sub = max_independent_subset(&coords(&[&[1.0, 1.0], &[2.0, 2.0]]), 1e-10).unwrap();
        assert_eq!(sub.indices, vec![0]);
        assert_relative_eq!(sub.alphas[(1, 0)], 2.0, epsilon = 1e-14);
        assert!(sub.max_residual < 1e-14);
    }

    #[test]
    fn zero_signals_have_no_rank() {
        let err = max_independent_subset(&coords(&[&[0.0, 0.0], &[0.0, 0.0]]), 1e-10).unwrap_err();
        assert_eq!(err, Error::ZeroRank);
    }

    #[test]
    fn one_dimensional_basis() {
        let signals = coords(&[&[1.0, -2.0, 0.5]]);
        for p in [1.5, 2.0, 3.0, 5.0] {
            let sol = solve_lewis(&signals, p, &LewisOptions::default()).unwrap();
            let norm = signals[0].lp_norm(p).unwrap();
            assert_relative_eq!(sol.c[(0, 0)].abs(), 1.0 / norm, max_relative = 1e-12);
            assert_relative_eq!(sol.d[(0, 0)].abs(), norm, max_relative = 1e-12);
        }
    }

    #[test]
    fn p2_whitens_the_plain_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let signals = random_signals(&mut rng, 3, 9);
        let sol = solve_lewis(&signals, 2.0, &LewisOptions::default()).unwrap();
        assert!(sol.weight.iter().all(|w| *w == 1.0));
        let mu = signals[0].space().weights();
        let g = DMatrix::from_fn(3, 3, |i, j| weighted_dot(signals[i].values(), signals[j].values(), mu));
        let whitened = &sol.c * g * sol.c.transpose();
        assert!((whitened - DMatrix::identity(3, 3) / 3.0).amax() < 1e-12);
        assert_eq!(sol.iterations, 1);
    }

    #[test]
    fn symmetric_pair_gives_equal_diagonal() {
        let space = Arc::new(MeasureSpace::<f64>::uniform(4, 1.0).unwrap());
        let signals = vec![
            Signal::new(vec![1.0, -1.0, 1.0, -1.0], space.clone()).unwrap(),
            Signal::new(vec![1.0, 1.0, -1.0, -1.0], space).unwrap(),
        ];
        let sol = solve_lewis(&signals, 4.0, &LewisOptions::default()).unwrap();
        assert!(sol.residual <= 1e-10);
        assert!(sol.c[(0, 1)].abs() < 1e-12 && sol.c[(1, 0)].abs() < 1e-12);
        assert_relative_eq!(sol.c[(0, 0)], sol.c[(1, 1)], max_relative = 1e-12);
    }

    #[test]
    fn converged_basis_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &p in &[1.5, 2.0, 3.0, 4.0, 6.0] {
            for _ in 0..5 {
                let n = rng.random_range(1..=5);
                let m = rng.random_range(n.max(2)..=20);
                let signals = random_signals(&mut rng, n + 3, m);
                let basis = LewisBasis::build(&signals, p, &LewisOptions::default()).unwrap();
                assert!(basis.residual <= 1e-10, "p={p} residual {}", basis.residual);
                assert!(basis.biorthogonality_residual() <= 1e-9);
                let cd = &basis.c * &basis.d;
                assert!((cd - DMatrix::identity(basis.rank(), basis.rank())).amax() < 1e-9);
                assert_relative_eq!(basis.gamma_z.lp_norm(p).unwrap(), 1.0, max_relative = 1e-8);
                for (w, g) in basis.weight.values().iter().zip(basis.gamma_z.values()) {
                    if *g > 0.0 {
                        assert_relative_eq!(*w, g.powf(p - 2.0), max_relative = 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn integral_kernel_matches_coefficient_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for &p in &[1.5, 2.0, 3.0, 4.0] {
            let signals = random_signals(&mut rng, 7, 12);
            let basis = LewisBasis::build(&signals, p, &LewisOptions::default()).unwrap();
            let a = basis.blaar_kernel().into_entries();
            let b = basis.integral_kernel().into_entries();
            assert!((&a - &b).amax() < 1e-9, "p={p}: {}", (&a - &b).amax());

            // the p' - 2 reading of the weight does not reproduce the kernel
            if p != 2.0 {
                let q = p / (p - 1.0);
                let mu = basis.space().weights();
                let alt: Vec<f64> = basis.gamma_z.values().iter().map(|g| g.powf(q - 2.0)).collect();
                let k00: f64 = (0..12).map(|k| signals[0].values()[k].powi(2) * mu[k] * alt[k]).sum();
                assert!((k00 - a[(0, 0)]).abs() > 1e-6);
            }
        }
    }

    #[test]
    fn p2_kernel_is_plain_gram() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let signals = random_signals(&mut rng, 6, 10);
        let basis = LewisBasis::build(&signals, 2.0, &LewisOptions::default()).unwrap();
        let mu = signals[0].space().weights();
        let plain = DMatrix::from_fn(6, 6, |i, j| weighted_dot(signals[i].values(), signals[j].values(), mu));
        assert!((basis.blaar_kernel().into_entries() - &plain).amax() < 1e-12);
        assert!((basis.normalized_kernel().into_entries() - plain).amax() < 1e-12);
        assert_eq!(basis.operator_scale(), 1.0);
    }

    #[test]
    fn unit_norm_single_direction_kernel() {
        let space = Arc::new(MeasureSpace::uniform(3, 1.0).unwrap());
        let base = vec![0.5, -0.5, 0.5];
        let p = 3.0;
        let norm = Signal::new(base.clone(), space.clone()).unwrap().lp_norm(p).unwrap();
        let unit: Vec<f64> = base.iter().map(|v| v / norm).collect();
        let scales = [1.0, -2.0, 0.5];
        let signals: Vec<Signal<f64>> = scales
            .iter()
            .map(|c| Signal::new(unit.iter().map(|v| v * c).collect(), space.clone()).unwrap())
            .collect();
        let basis = LewisBasis::build(&signals, p, &LewisOptions::default()).unwrap();
        let k = basis.blaar_kernel().into_entries();
        for s in 0..3 {
            for l in 0..3 {
                assert_relative_eq!(k[(s, l)], scales[s] * scales[l], max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn normalized_embedding_is_non_expansive() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for &p in &[1.5, 3.0] {
            let signals = random_signals(&mut rng, 8, 10);
            let basis = LewisBasis::build(&signals, p, &LewisOptions::default()).unwrap();
            let k = basis.normalized_kernel().into_entries();
            for (s, x) in signals.iter().enumerate() {
                let norm = x.lp_norm(p).unwrap();
                assert!(k[(s, s)] <= norm * norm * (1.0 + 1e-8));
            }
            let n = basis.rank() as f64;
            let kappa = (0.5 - 1.0 / p).abs();
            let scale = basis.operator_scale();
            for _ in 0..200 {
                let b: Vec<f64> = (0..basis.rank()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let x = basis.combination(&b).unwrap().lp_norm(p).unwrap();
                let r = basis.embed(&b).unwrap().norm();
                if p >= 2.0 {
                    assert!(r <= x * (1.0 + 1e-8));
                    assert!(x / r <= n.powf(kappa) * (1.0 + 1e-6), "p={p}: blow-up {}", x / r);
                } else {
                    // the raw map never shrinks; dividing by the scale bounds the loss
                    assert!(x / r <= scale * (1.0 + 1e-8));
                    assert!(r / x <= n.powf(kappa) / scale * (1.0 + 1e-6));
                }
            }
        }
    }

    #[test]
    fn scale_equivariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let signals = random_signals(&mut rng, 5, 9);
        let lambda = 3.5;
        let scaled: Vec<Signal<f64>> = signals.iter().map(|s| s.scaled(lambda)).collect();
        let p = 3.0;
        let a = LewisBasis::build(&signals, p, &LewisOptions::default()).unwrap();
        let b = LewisBasis::build(&scaled, p, &LewisOptions::default()).unwrap();
        assert!((&a.c / lambda - &b.c).amax() < 1e-9);
        assert!((&a.d * lambda - &b.d).amax() < 1e-9);
        let ka = a.blaar_kernel().into_entries() * (lambda * lambda);
        assert!((ka - b.blaar_kernel().into_entries()).amax() < 1e-8);
    }

    #[test]
    fn non_convergence_is_reported() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let signals = random_signals(&mut rng, 4, 12);
        let opts = LewisOptions { max_iterations: 2, tolerance: 1e-14, ..LewisOptions::default() };
        let err = solve_lewis(&signals, 3.0, &opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { iterations: 2, .. }));
    }

    #[test]
    fn rejects_bad_exponent() {
        let signals = coords(&[&[1.0, 0.0]]);
        assert!(solve_lewis(&signals, 1.0, &LewisOptions::default()).is_err());
    }
}
