//! Sobolev spaces `W_p^s` on a periodic grid, reduced to `L_p`.
//!
//! The Bessel potential `f ↦ ((1 + ‖k‖²)^{s/2} f̂)^∨` is an isomorphism
//! `W_p^s → L_p`. On the torus `[0, L)^m` sampled at `N` points per axis it is
//! a diagonal multiplier in the discrete Fourier basis, so lifting and
//! lowering are exact up to rounding.
//!
//! Conventions: the forward DFT is unnormalized, the inverse carries `1/N^m`,
//! and the angular frequency of index `j` is `2πj/L` with `j` taken in
//! `(-N/2, N/2]`. Multipliers are convention free; the only place the scaling
//! shows is the Plancherel form
//! `‖f‖²_{2} = (L^m / N^{2m}) Σ_j |f̂_j|²` under the cell measure `(L/N)^m`.
//!
//! Evaluation at a grid node `x` is the functional `f ↦ (lower η)(x)` on
//! `η = lift f`, represented in `L_{p'}` by the lowered delta divided by the
//! cell volume. Those dual signals are what the lattice learner consumes.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftNum, FftPlanner};

use crate::blaar::{blaar_run_with_basis, GameTrace, SemiOnlineGame};
use crate::error::{check_len, invalid, Error, Result};
use crate::lattice::{dual_exponent, pairing, DualVector, GameConfig, MeasureSpace, Signal};
use crate::lewis::{LewisBasis, LewisOptions};
use crate::Scalar;

/// Default cap on `N^m`.
pub const MAX_GRID_POINTS: usize = 1 << 20;

fn abs<T: Scalar>(x: T) -> T {
    x.abs()
}

/// Uniform periodic grid on `[0, L)^m`, `N` nodes per axis, stored row-major
/// with axis 0 slowest.
#[derive(Debug, Clone, PartialEq)]
pub struct DomainGrid<T: Scalar> {
    dimension: usize,
    side: T,
    resolution: usize,
    space: Arc<MeasureSpace<T>>,
}

impl<T: Scalar> DomainGrid<T> {
    pub fn new(dimension: usize, side: T, resolution: usize) -> Result<Self> {
        Self::with_cap(dimension, side, resolution, MAX_GRID_POINTS)
    }

    pub fn with_cap(dimension: usize, side: T, resolution: usize, cap: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(invalid("dimension", "must be at least 1"));
        }
        if resolution < 2 {
            return Err(invalid("resolution", "need at least 2 nodes per axis"));
        }
        if !(side > T::zero()) || !side.is_finite() {
            return Err(invalid("side", format!("must be finite and positive, got {side}")));
        }
        let total = u32::try_from(dimension)
            .ok()
            .and_then(|d| resolution.checked_pow(d))
            .filter(|t| *t <= cap)
            .ok_or_else(|| invalid("resolution", format!("{resolution}^{dimension} exceeds the cap of {cap} nodes")))?;
        let cell = (side / T::of_usize(resolution)).powi(dimension as i32);
        Ok(Self {
            dimension,
            side,
            resolution,
            space: Arc::new(MeasureSpace::uniform(total, cell)?),
        })
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn side(&self) -> T {
        self.side
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn spacing(&self) -> T {
        self.side / T::of_usize(self.resolution)
    }

    pub fn cell_volume(&self) -> T {
        self.space.weights()[0]
    }

    pub fn space(&self) -> &Arc<MeasureSpace<T>> {
        &self.space
    }

    /// Multi-index of a flat node index.
    pub fn node(&self, mut index: usize) -> Vec<usize> {
        let mut idx = vec![0; self.dimension];
        for axis in (0..self.dimension).rev() {
            idx[axis] = index % self.resolution;
            index /= self.resolution;
        }
        idx
    }

    pub fn flat_index(&self, node: &[usize]) -> usize {
        node.iter().fold(0, |acc, i| acc * self.resolution + i % self.resolution)
    }

    pub fn coordinates(&self, index: usize) -> Vec<T> {
        let h = self.spacing();
        self.node(index).into_iter().map(|i| T::of_usize(i) * h).collect()
    }

    /// Nearest node to `point` (periodically) and the Euclidean snapping
    /// distance.
    pub fn snap(&self, point: &[T]) -> Result<(usize, T)> {
        check_len(self.dimension, point.len())?;
        let h = self.spacing();
        let mut node = Vec::with_capacity(self.dimension);
        let mut dist_sq = T::zero();
        for &x in point {
            if !x.is_finite() || x < T::zero() || x > self.side {
                return Err(invalid("point", format!("coordinate {x} is outside [0, {}]", self.side)));
            }
            let j = (x / h).round();
            dist_sq += (x - j * h) * (x - j * h);
            let j = j.as_f64() as usize % self.resolution;
            node.push(j);
        }
        Ok((self.flat_index(&node), dist_sq.sqrt()))
    }

    /// Signed frequency index of each node along one axis, in `(-N/2, N/2]`.
    fn signed_index(&self, j: usize) -> i64 {
        let n = self.resolution as i64;
        let j = j as i64;
        if 2 * j > n {
            j - n
        } else {
            j
        }
    }

    /// Angular frequency vector `2πj/L` of a flat spectral index.
    pub fn frequency(&self, index: usize) -> Vec<T> {
        let scale = T::of(2.0 * PI) / self.side;
        self.node(index)
            .into_iter()
            .map(|j| T::of(self.signed_index(j) as f64) * scale)
            .collect()
    }

    /// Samples `f` at every node.
    pub fn sample(&self, mut f: impl FnMut(&[T]) -> T) -> Result<Signal<T>> {
        let values = (0..self.len()).map(|i| f(&self.coordinates(i))).collect();
        Signal::new(values, Arc::clone(&self.space))
    }

    /// Cyclic shift of a grid function by `offset` nodes per axis.
    pub fn shift(&self, f: &Signal<T>, offset: &[usize]) -> Result<Signal<T>> {
        check_len(self.len(), f.len())?;
        check_len(self.dimension, offset.len())?;
        let mut out = vec![T::zero(); self.len()];
        for (i, v) in f.values().iter().enumerate() {
            let node: Vec<usize> = self.node(i).iter().zip(offset).map(|(a, b)| a + b).collect();
            out[self.flat_index(&node)] = *v;
        }
        Signal::new(out, Arc::clone(&self.space))
    }
}

/// Smoothness `s` and integrability `p` of `W_p^s` on an `m`-dimensional
/// domain; `sp > m` makes point evaluation bounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SobolevParams<T> {
    pub s: T,
    pub p: T,
    pub m: usize,
}

impl<T: Scalar> SobolevParams<T> {
    pub fn new(s: T, p: T, m: usize) -> Result<Self> {
        let params = Self { s, p, m };
        params.validate()?;
        Ok(params)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.s > T::zero()) || !self.s.is_finite() {
            return Err(invalid("s", format!("smoothness must be positive, got {}", self.s)));
        }
        if !(self.p > T::one()) || !self.p.is_finite() {
            return Err(invalid("p", format!("need 1 < p < ∞, got {}", self.p)));
        }
        if self.m == 0 {
            return Err(invalid("m", "dimension must be at least 1"));
        }
        if !(self.s * self.p > T::of_usize(self.m)) {
            return Err(invalid("s", format!("need s·p > m, got s = {}, p = {}, m = {}", self.s, self.p, self.m)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    /// `W_p^s → L_p`, multiplier `(1+‖k‖²)^{s/2}`.
    Lift,
    /// `L_p → W_p^s`, multiplier `(1+‖k‖²)^{-s/2}`.
    Lower,
}

/// Multi-dimensional DFT on a [`DomainGrid`] with cached plans.
struct GridFft<T: FftNum> {
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    resolution: usize,
    dimension: usize,
}

impl<T: Scalar + FftNum> GridFft<T> {
    fn new(grid: &DomainGrid<T>) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            forward: planner.plan_fft_forward(grid.resolution),
            inverse: planner.plan_fft_inverse(grid.resolution),
            resolution: grid.resolution,
            dimension: grid.dimension,
        }
    }

    fn transform(&self, data: &mut [Complex<T>], inverse: bool) {
        let n = self.resolution;
        let fft = if inverse { &self.inverse } else { &self.forward };
        let mut line = vec![Complex::new(T::zero(), T::zero()); n];
        for axis in 0..self.dimension {
            let stride = n.pow((self.dimension - 1 - axis) as u32);
            let block = stride * n;
            for start in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let base = start + offset;
                    for (k, slot) in line.iter_mut().enumerate() {
                        *slot = data[base + k * stride];
                    }
                    fft.process(&mut line);
                    for (k, v) in line.iter().enumerate() {
                        data[base + k * stride] = *v;
                    }
                }
            }
        }
        if inverse {
            let scale = T::one() / T::of_usize(data.len());
            for v in data.iter_mut() {
                *v *= scale;
            }
        }
    }

    fn forward(&self, values: &[T]) -> Vec<Complex<T>> {
        let mut data: Vec<Complex<T>> = values.iter().map(|v| Complex::new(*v, T::zero())).collect();
        self.transform(&mut data, false);
        data
    }

    /// Inverse transform keeping the real part.
    fn inverse_real(&self, mut data: Vec<Complex<T>>) -> Vec<T> {
        self.transform(&mut data, true);
        data.into_iter().map(|c| c.re).collect()
    }
}

/// Bessel-potential pair for one grid and smoothness, with the multiplier
/// arrays built once.
pub struct BesselTransform<T: Scalar + FftNum> {
    grid: DomainGrid<T>,
    s: T,
    fft: GridFft<T>,
    lift: Vec<T>,
    lower: Vec<T>,
}

impl<T: Scalar + FftNum> std::fmt::Debug for BesselTransform<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BesselTransform").field("grid", &self.grid).field("s", &self.s).finish()
    }
}

impl<T: Scalar + FftNum> BesselTransform<T> {
    pub fn new(grid: &DomainGrid<T>, s: T) -> Result<Self> {
        if !s.is_finite() {
            return Err(Error::NonFinite("s"));
        }
        let half = s * T::of(0.5);
        let lift: Vec<T> = (0..grid.len())
            .map(|i| {
                let k_sq = grid.frequency(i).iter().fold(T::zero(), |acc, k| acc + *k * *k);
                (T::one() + k_sq).powf(half)
            })
            .collect();
        let lower = lift.iter().map(|v| T::one() / *v).collect();
        Ok(Self {
            grid: grid.clone(),
            s,
            fft: GridFft::new(grid),
            lift,
            lower,
        })
    }

    pub fn grid(&self) -> &DomainGrid<T> {
        &self.grid
    }

    pub fn smoothness(&self) -> T {
        self.s
    }

    /// `(1+‖k‖²)^{s/2}` per spectral index.
    pub fn lift_multiplier(&self) -> &[T] {
        &self.lift
    }

    fn filter(&self, f: &Signal<T>, multiplier: impl Fn(usize) -> Complex<T>) -> Result<Signal<T>> {
        check_len(self.grid.len(), f.len())?;
        if f.values().iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("grid function"));
        }
        let mut spectrum = self.fft.forward(f.values());
        for (i, c) in spectrum.iter_mut().enumerate() {
            *c *= multiplier(i);
        }
        Signal::new(self.fft.inverse_real(spectrum), Arc::clone(self.grid.space()))
    }

    pub fn apply(&self, f: &Signal<T>, direction: Direction) -> Result<Signal<T>> {
        let m = match direction {
            Direction::Lift => &self.lift,
            Direction::Lower => &self.lower,
        };
        self.filter(f, |i| Complex::new(m[i], T::zero()))
    }

    pub fn lift(&self, f: &Signal<T>) -> Result<Signal<T>> {
        self.apply(f, Direction::Lift)
    }

    pub fn lower(&self, f: &Signal<T>) -> Result<Signal<T>> {
        self.apply(f, Direction::Lower)
    }

    /// Spectral partial derivative `∂^α f`. Odd orders drop the Nyquist mode,
    /// whose derivative is not real.
    pub fn derivative(&self, f: &Signal<T>, alpha: &[usize]) -> Result<Signal<T>> {
        check_len(self.grid.dimension, alpha.len())?;
        let n = self.grid.resolution;
        self.filter(f, |i| {
            let node = self.grid.node(i);
            let k = self.grid.frequency(i);
            let mut factor = Complex::new(T::one(), T::zero());
            for (axis, &a) in alpha.iter().enumerate() {
                if a % 2 == 1 && n.is_multiple_of(2) && node[axis] == n / 2 {
                    return Complex::new(T::zero(), T::zero());
                }
                let ik = Complex::new(T::zero(), k[axis]);
                for _ in 0..a {
                    factor *= ik;
                }
            }
            factor
        })
    }

    /// Evaluation functional at a node as an `L_{p'}` signal: the lowered
    /// delta over the cell volume, so that
    /// `pairing(dual_signal(x), lift f) = f(x)`.
    pub fn dual_signal(&self, node: usize) -> Result<Signal<T>> {
        if node >= self.grid.len() {
            return Err(invalid("node", format!("index {node} outside a grid of {} nodes", self.grid.len())));
        }
        let mut delta = vec![T::zero(); self.grid.len()];
        delta[node] = T::one() / self.grid.cell_volume();
        self.lower(&Signal::new(delta, Arc::clone(self.grid.space()))?)
    }
}

/// One-shot `((1+‖k‖²)^{±s/2} f̂)^∨`.
pub fn bessel_multiplier_apply<T: Scalar + FftNum>(
    f: &Signal<T>,
    grid: &DomainGrid<T>,
    s: T,
    direction: Direction,
) -> Result<Signal<T>> {
    BesselTransform::new(grid, s)?.apply(f, direction)
}

/// `‖f‖_{W_p^s} = ‖lift f‖_p`.
pub fn sobolev_norm<T: Scalar + FftNum>(f: &Signal<T>, grid: &DomainGrid<T>, params: &SobolevParams<T>) -> Result<T> {
    params.validate()?;
    check_len(params.m, grid.dimension)?;
    bessel_multiplier_apply(f, grid, params.s, Direction::Lift)?.lp_norm(params.p)
}

/// Evaluation functional at `point` (snapped to the nearest node) in
/// `L_{p'}`; also returns the snapping distance.
pub fn dual_signal<T: Scalar + FftNum>(
    point: &[T],
    grid: &DomainGrid<T>,
    params: &SobolevParams<T>,
) -> Result<(Signal<T>, T)> {
    params.validate()?;
    check_len(params.m, grid.dimension)?;
    let (node, dist) = grid.snap(point)?;
    Ok((BesselTransform::new(grid, params.s)?.dual_signal(node)?, dist))
}

/// `‖dual_signal(x)‖_{p'}`, the same at every node by translation
/// invariance: an upper bound on `|f(x)| / ‖f‖_{W_p^s}`.
pub fn evaluation_constant<T: Scalar + FftNum>(grid: &DomainGrid<T>, params: &SobolevParams<T>) -> Result<T> {
    params.validate()?;
    let beta = BesselTransform::new(grid, params.s)?.dual_signal(0)?;
    beta.lp_norm(dual_exponent(params.p)?)
}

/// Real trigonometric polynomial on `[0, L)^m`:
/// `Σ a cos(2π j·x/L) + b sin(2π j·x/L)` over integer frequency vectors `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct BandLimited<T> {
    pub side: T,
    pub terms: Vec<TrigTerm<T>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrigTerm<T> {
    pub frequency: Vec<i64>,
    pub cos: T,
    pub sin: T,
}

impl<T: Scalar> BandLimited<T> {
    pub fn new(side: T, terms: Vec<TrigTerm<T>>) -> Result<Self> {
        if !(side > T::zero()) {
            return Err(invalid("side", "must be positive"));
        }
        if let Some(first) = terms.first() {
            if terms.iter().any(|t| t.frequency.len() != first.frequency.len()) {
                return Err(invalid("terms", "all frequency vectors need the same dimension"));
            }
        }
        Ok(Self { side, terms })
    }

    pub fn dimension(&self) -> Option<usize> {
        self.terms.first().map(|t| t.frequency.len())
    }

    pub fn max_frequency(&self) -> i64 {
        self.terms.iter().flat_map(|t| t.frequency.iter().map(|j| j.abs())).max().unwrap_or(0)
    }

    pub fn eval(&self, x: &[T]) -> T {
        let scale = T::of(2.0 * PI) / self.side;
        self.terms.iter().fold(T::zero(), |acc, t| {
            let phase = t.frequency.iter().zip(x).fold(T::zero(), |a, (j, xi)| a + T::of(*j as f64) * *xi) * scale;
            acc + t.cos * phase.cos() + t.sin * phase.sin()
        })
    }

    /// Samples on a grid that resolves every frequency (`|j| < N/2`).
    pub fn sample(&self, grid: &DomainGrid<T>) -> Result<Signal<T>> {
        if let Some(m) = self.dimension() {
            check_len(grid.dimension(), m)?;
        }
        if 2 * self.max_frequency() >= grid.resolution() as i64 {
            return Err(invalid(
                "resolution",
                format!("frequency {} is not resolved by N = {}", self.max_frequency(), grid.resolution()),
            ));
        }
        grid.sample(|x| self.eval(x))
    }
}

/// Classical norm `(Σ_{|α|≤s} ‖∂^α f‖_p^p)^{1/p}` for integer `s`, with
/// spectral derivatives.
pub fn classical_sobolev_norm<T: Scalar + FftNum>(
    f: &Signal<T>,
    grid: &DomainGrid<T>,
    order: usize,
    p: T,
) -> Result<T> {
    let transform = BesselTransform::new(grid, T::zero())?;
    let mut total = T::zero();
    for alpha in multi_indices(grid.dimension(), order) {
        let d = transform.derivative(f, &alpha)?;
        total += d.lp_norm(p)?.powf(p);
    }
    Ok(total.powf(T::one() / p))
}

fn multi_indices(dim: usize, max_order: usize) -> Vec<Vec<usize>> {
    let mut out = vec![vec![]];
    for _ in 0..dim {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<usize>| {
                let used: usize = prefix.iter().sum();
                (0..=max_order - used).map(move |a| {
                    let mut next = prefix.clone();
                    next.push(a);
                    next
                })
            })
            .collect();
    }
    out
}

/// Ratios `‖lift f‖_p / ‖f‖_classical` over a probe family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sandwich<T> {
    pub min_ratio: T,
    pub max_ratio: T,
}

impl<T: Scalar> Sandwich<T> {
    /// The smallest `C` with `‖f‖/C ≤ ‖lift f‖_p ≤ C‖f‖` on the probes.
    pub fn constant(&self) -> T {
        self.max_ratio.max(T::one() / self.min_ratio)
    }
}

/// Deterministic band-limited probes with frequencies up to `max_frequency`
/// per axis: single modes, a constant, and mixtures.
pub fn probe_functions<T: Scalar>(side: T, dimension: usize, max_frequency: i64) -> Result<Vec<BandLimited<T>>> {
    let mut freqs: Vec<Vec<i64>> = vec![vec![]];
    for _ in 0..dimension {
        freqs = freqs
            .into_iter()
            .flat_map(|prefix| {
                (0..=max_frequency).map(move |j| {
                    let mut next = prefix.clone();
                    next.push(j);
                    next
                })
            })
            .collect();
    }
    let mut probes = Vec::new();
    for (i, j) in freqs.iter().enumerate() {
        let phase = T::of(0.3 + 0.7 * i as f64);
        probes.push(BandLimited::new(
            side,
            vec![TrigTerm { frequency: j.clone(), cos: phase.cos(), sin: phase.sin() }],
        )?);
    }
    let mixed: Vec<TrigTerm<T>> = freqs
        .iter()
        .enumerate()
        .map(|(i, j)| {
            let c = T::one() / T::of((1 + i) as f64);
            TrigTerm { frequency: j.clone(), cos: c, sin: c * T::of(if i % 2 == 0 { 0.5 } else { -0.5 }) }
        })
        .collect();
    probes.push(BandLimited::new(side, mixed.clone())?);
    let alternating = mixed
        .into_iter()
        .enumerate()
        .map(|(i, t)| TrigTerm { cos: if i % 2 == 0 { t.cos } else { -t.cos }, ..t })
        .collect();
    probes.push(BandLimited::new(side, alternating)?);
    Ok(probes)
}

/// Measures the norm equivalence between `‖lift f‖_p` and the classical norm
/// of integer order `s` over `probes`.
pub fn measure_sandwich<T: Scalar + FftNum>(
    grid: &DomainGrid<T>,
    params: &SobolevParams<T>,
    probes: &[BandLimited<T>],
) -> Result<Sandwich<T>> {
    params.validate()?;
    let order = params.s.round();
    if abs(params.s - order) > T::of(1e-12) {
        return Err(invalid("s", "the classical comparison norm needs an integer smoothness"));
    }
    if probes.is_empty() {
        return Err(invalid("probes", "need at least one probe"));
    }
    let order = order.as_f64() as usize;
    let transform = BesselTransform::new(grid, params.s)?;
    let mut min_ratio = T::of(f64::INFINITY);
    let mut max_ratio = T::zero();
    for probe in probes {
        let f = probe.sample(grid)?;
        let classical = classical_sobolev_norm(&f, grid, order, params.p)?;
        if classical <= T::zero() {
            continue;
        }
        let ratio = transform.lift(&f)?.lp_norm(params.p)? / classical;
        min_ratio = min_ratio.min(ratio);
        max_ratio = max_ratio.max(ratio);
    }
    if max_ratio <= T::zero() {
        return Err(Error::ZeroRank);
    }
    Ok(Sandwich { min_ratio, max_ratio })
}

/// Comparator `f` in `W_p^s` seen by the lattice learner: `η = lift f` in
/// `L_p = (L_{p'})^*`.
pub fn comparator_functional<T: Scalar + FftNum>(
    f: &Signal<T>,
    transform: &BesselTransform<T>,
    params: &SobolevParams<T>,
) -> Result<DualVector<T>> {
    let eta = transform.lift(f)?;
    DualVector::new(eta.values().to_vec(), params.p, Arc::clone(transform.grid().space()))
}

#[derive(Debug, Clone)]
pub struct SobolevTrace<T: Scalar> {
    pub trace: GameTrace<T>,
    /// Exponent of the lattice the dual signals live in.
    pub lattice_exponent: T,
    pub nodes: Vec<usize>,
    pub snap_distances: Vec<T>,
    pub signals: Vec<Signal<T>>,
    pub basis: Option<LewisBasis<T>>,
}

/// Maps every point to its evaluation functional in `L_{p'}` and plays the
/// lattice game on those signals.
pub fn sobolev_blaar_run<T: Scalar + FftNum>(
    points: &[Vec<T>],
    outcomes: &[T],
    grid: &DomainGrid<T>,
    params: &SobolevParams<T>,
    y_bound: T,
    ridge: Option<T>,
) -> Result<SobolevTrace<T>> {
    params.validate()?;
    check_len(params.m, grid.dimension())?;
    check_len(points.len(), outcomes.len())?;
    let transform = BesselTransform::new(grid, params.s)?;
    let mut nodes = Vec::with_capacity(points.len());
    let mut snap_distances = Vec::with_capacity(points.len());
    let mut signals = Vec::with_capacity(points.len());
    for point in points {
        let (node, dist) = grid.snap(point)?;
        nodes.push(node);
        snap_distances.push(dist);
        signals.push(transform.dual_signal(node)?);
    }
    let lattice_exponent = dual_exponent(params.p)?;
    let config = GameConfig::new(lattice_exponent, y_bound, points.len(), ridge)?;
    let game = SemiOnlineGame::new(signals.clone(), outcomes.to_vec(), config)?;
    let (trace, basis) = blaar_run_with_basis(&game, &LewisOptions::default())?;
    Ok(SobolevTrace {
        trace,
        lattice_exponent,
        nodes,
        snap_distances,
        signals,
        basis,
    })
}

/// `f(x)` recovered from `η = lift f` through the dual signal.
pub fn evaluate_through_dual<T: Scalar>(beta: &Signal<T>, eta: &DualVector<T>) -> Result<T> {
    pairing(eta, beta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kaar::{GramMatrix, KaarPredictor};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_band_limited(rng: &mut ChaCha8Rng, side: f64, m: usize, max_freq: i64, terms: usize) -> BandLimited<f64> {
        let terms = (0..terms)
            .map(|_| TrigTerm {
                frequency: (0..m).map(|_| rng.random_range(-max_freq..=max_freq)).collect(),
                cos: rng.random_range(-1.0..1.0),
                sin: rng.random_range(-1.0..1.0),
            })
            .collect();
        BandLimited::new(side, terms).unwrap()
    }

    /// Direct `O(N^{2m})` DFT as an oracle independent of the FFT path.
    fn naive_dft(grid: &DomainGrid<f64>, values: &[f64]) -> Vec<Complex<f64>> {
        let n = grid.resolution() as f64;
        (0..grid.len())
            .map(|k| {
                let kn = grid.node(k);
                values.iter().enumerate().fold(Complex::new(0.0, 0.0), |acc, (x, v)| {
                    let xn = grid.node(x);
                    let phase: f64 = kn.iter().zip(&xn).map(|(a, b)| (*a * *b) as f64).sum::<f64>() * 2.0 * PI / n;
                    acc + Complex::new(0.0, -phase).exp() * *v
                })
            })
            .collect()
    }

    #[test]
    fn constant_is_fixed_by_the_multiplier() {
        let grid = DomainGrid::<f64>::new(2, 3.0, 8).unwrap();
        let t = BesselTransform::new(&grid, 1.7).unwrap();
        let c = grid.sample(|_| 2.5).unwrap();
        for v in t.lift(&c).unwrap().values() {
            assert_relative_eq!(*v, 2.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn pure_mode_is_scaled_by_multiplier() {
        let side = 2.0 * PI;
        let grid = DomainGrid::<f64>::new(1, side, 16).unwrap();
        let s = 1.5;
        let f = grid.sample(|x| (3.0 * x[0]).cos()).unwrap();
        let lifted = bessel_multiplier_apply(&f, &grid, s, Direction::Lift).unwrap();
        let factor = (1.0f64 + 9.0).powf(s / 2.0);
        for (a, b) in lifted.values().iter().zip(f.values()) {
            assert_relative_eq!(*a, factor * b, epsilon = 1e-11);
        }
    }

    #[test]
    fn round_trip_is_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for &(m, n) in &[(1, 32), (2, 12), (3, 6)] {
            let grid = DomainGrid::<f64>::new(m, 1.0, n).unwrap();
            let t = BesselTransform::new(&grid, 2.3).unwrap();
            let f = grid.sample(|_| rng.random_range(-1.0..1.0)).unwrap();
            let back = t.lower(&t.lift(&f).unwrap()).unwrap();
            for (a, b) in back.values().iter().zip(f.values()) {
                assert!((a - b).abs() <= 1e-8);
            }
        }
    }

    #[test]
    fn plancherel_at_p2() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for &(m, n, side) in &[(1usize, 24usize, 2.0), (2, 10, 5.0)] {
            let grid = DomainGrid::<f64>::new(m, side, n).unwrap();
            let s = 1.25;
            let params = SobolevParams::new(s, 2.0, m).unwrap();
            let f = random_band_limited(&mut rng, side, m, (n as i64 / 2) - 1, 5).sample(&grid).unwrap();
            let norm = sobolev_norm(&f, &grid, &params).unwrap();
            let spectrum = naive_dft(&grid, f.values());
            let sum: f64 = spectrum
                .iter()
                .enumerate()
                .map(|(k, c)| {
                    let k_sq: f64 = grid.frequency(k).iter().map(|v| v * v).sum();
                    (1.0 + k_sq).powf(s) * c.norm_sqr()
                })
                .sum();
            let expect = side.powi(m as i32) / (n as f64).powi(2 * m as i32) * sum;
            assert_relative_eq!(norm * norm, expect, max_relative = 1e-8);
        }
    }

    #[test]
    fn norm_examples() {
        let grid = DomainGrid::<f64>::new(2, 1.5, 8).unwrap();
        let params = SobolevParams::new(1.0, 3.0, 2).unwrap();
        assert_eq!(sobolev_norm(&grid.sample(|_| 0.0).unwrap(), &grid, &params).unwrap(), 0.0);
        let one = sobolev_norm(&grid.sample(|_| 1.0).unwrap(), &grid, &params).unwrap();
        assert_relative_eq!(one, 2.25f64.powf(1.0 / 3.0), max_relative = 1e-12);

        let grid = DomainGrid::<f64>::new(1, 2.0 * PI, 32).unwrap();
        let params = SobolevParams::new(2.0, 2.0, 1).unwrap();
        let f = grid.sample(|x| (4.0 * x[0]).sin()).unwrap();
        let norm = sobolev_norm(&f, &grid, &params).unwrap();
        assert_relative_eq!(norm, 17.0 * f.lp_norm(2.0).unwrap(), max_relative = 1e-11);
    }

    #[test]
    fn dual_signal_reproduces_point_values() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &(m, n, s, p) in &[(1usize, 32usize, 1.0, 2.0), (1, 40, 0.75, 3.0), (2, 12, 1.5, 1.5), (2, 10, 2.0, 4.0)] {
            let side = 3.0;
            let grid = DomainGrid::<f64>::new(m, side, n).unwrap();
            let params = SobolevParams::new(s, p, m).unwrap();
            let t = BesselTransform::new(&grid, s).unwrap();
            let poly = random_band_limited(&mut rng, side, m, n as i64 / 2 - 1, 4);
            let f = poly.sample(&grid).unwrap();
            let eta = comparator_functional(&f, &t, &params).unwrap();
            for _ in 0..5 {
                let node = rng.random_range(0..grid.len());
                let beta = t.dual_signal(node).unwrap();
                let x = grid.coordinates(node);
                let got = evaluate_through_dual(&beta, &eta).unwrap();
                assert!((got - poly.eval(&x)).abs() <= 1e-6, "m={m} s={s} p={p}");
            }
        }
    }

    #[test]
    fn dual_signal_is_translation_covariant() {
        let grid = DomainGrid::<f64>::new(2, 1.0, 8).unwrap();
        let t = BesselTransform::new(&grid, 1.5).unwrap();
        let base = t.dual_signal(grid.flat_index(&[1, 2])).unwrap();
        let moved = t.dual_signal(grid.flat_index(&[4, 7])).unwrap();
        let shifted = grid.shift(&base, &[3, 5]).unwrap();
        for (a, b) in moved.values().iter().zip(shifted.values()) {
            assert_relative_eq!(*a, *b, epsilon = 1e-12);
        }
    }

    #[test]
    fn larger_smoothness_flattens_the_kernel() {
        let grid = DomainGrid::<f64>::new(1, 2.0, 32).unwrap();
        let spread = |s: f64| {
            let beta = BesselTransform::new(&grid, s).unwrap().dual_signal(0).unwrap();
            let v = beta.values();
            v.iter().cloned().fold(f64::MIN, f64::max) - v.iter().cloned().fold(f64::MAX, f64::min)
        };
        assert!(spread(3.0) < spread(1.0));
        assert!(spread(12.0) < 1e-3 * spread(1.0));
        let beta = BesselTransform::new(&grid, 12.0).unwrap().dual_signal(5).unwrap();
        for v in beta.values() {
            assert_relative_eq!(*v, 0.5, max_relative = 1e-3);
        }
    }

    #[test]
    fn evaluation_constant_is_translation_invariant_and_stable() {
        let params = SobolevParams::new(1.0, 2.0, 1).unwrap();
        let coarse = DomainGrid::<f64>::new(1, 2.0, 64).unwrap();
        let fine = DomainGrid::<f64>::new(1, 2.0, 128).unwrap();
        let c1 = evaluation_constant(&coarse, &params).unwrap();
        let c2 = evaluation_constant(&fine, &params).unwrap();
        assert!((c1 - c2).abs() / c2 < 0.05);
        let t = BesselTransform::new(&coarse, 1.0).unwrap();
        for node in [0, 13, 40] {
            let n = t.dual_signal(node).unwrap().lp_norm(2.0).unwrap();
            assert_relative_eq!(n, c1, max_relative = 1e-12);
        }
        // periodic Fourier series of the evaluation functional at p = 2
        let expected: f64 = (-2000i64..=2000)
            .map(|j| 1.0 / (1.0 + (PI * j as f64).powi(2)))
            .sum::<f64>()
            .sqrt()
            / 2f64.sqrt();
        assert_relative_eq!(c2, expected, max_relative = 0.02);
    }

    #[test]
    fn sandwich_is_resolution_stable() {
        let params = SobolevParams::new(1.0, 3.0, 1).unwrap();
        let probes = probe_functions(2.0f64, 1, 4).unwrap();
        let a = measure_sandwich(&DomainGrid::<f64>::new(1, 2.0, 32).unwrap(), &params, &probes).unwrap();
        let b = measure_sandwich(&DomainGrid::<f64>::new(1, 2.0, 64).unwrap(), &params, &probes).unwrap();
        assert!((a.constant() - b.constant()).abs() / b.constant() < 0.05);
        assert!(a.constant() >= 1.0 && a.constant().is_finite());
        assert!(measure_sandwich(&DomainGrid::<f64>::new(1, 2.0, 64).unwrap(), &SobolevParams::new(1.5, 3.0, 1).unwrap(), &probes).is_err());
    }

    #[test]
    fn classical_norm_at_p2_order1() {
        let grid = DomainGrid::<f64>::new(1, 2.0 * PI, 16).unwrap();
        let f = grid.sample(|x| (2.0 * x[0]).cos()).unwrap();
        let norm = classical_sobolev_norm(&f, &grid, 1, 2.0).unwrap();
        let l2 = f.lp_norm(2.0).unwrap();
        assert_relative_eq!(norm, (5.0f64).sqrt() * l2, max_relative = 1e-11);
        assert_eq!(multi_indices(2, 2).len(), 6);
    }

    #[test]
    fn p2_run_matches_kaar_on_plain_products() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let grid = DomainGrid::<f64>::new(1, 1.0, 32).unwrap();
        let params = SobolevParams::new(1.0, 2.0, 1).unwrap();
        let points: Vec<Vec<f64>> = (0..12).map(|_| vec![rng.random_range(0.0..1.0)]).collect();
        let outcomes: Vec<f64> = (0..12).map(|_| rng.random_range(-1.0..1.0)).collect();
        let run = sobolev_blaar_run(&points, &outcomes, &grid, &params, 1.0, None).unwrap();
        assert_eq!(run.lattice_exponent, 2.0);
        let mu = grid.cell_volume();
        let k = nalgebra::DMatrix::from_fn(12, 12, |i, j| {
            run.signals[i].values().iter().zip(run.signals[j].values()).map(|(a, b)| mu * a * b).sum()
        });
        let predictor = KaarPredictor::new(&GramMatrix::new(k).unwrap(), run.trace.ridge).unwrap();
        let expect = predictor.predict_all(&outcomes).unwrap();
        for (a, b) in run.trace.predictions.iter().zip(&expect) {
            assert!((a - b).abs() <= 1e-6 * b.abs().max(1.0));
        }
        assert!(run.snap_distances.iter().all(|d| *d <= 0.5 / 32.0 + 1e-15));
    }

    #[test]
    fn single_point_predicts_zero() {
        let grid = DomainGrid::<f64>::new(1, 1.0, 16).unwrap();
        let params = SobolevParams::new(1.0, 3.0, 1).unwrap();
        let run = sobolev_blaar_run(&[vec![0.3]], &[0.7], &grid, &params, 1.0, None).unwrap();
        assert_eq!(run.trace.predictions, vec![0.0]);
        assert_relative_eq!(run.lattice_exponent, 1.5, epsilon = 1e-15);
    }

    #[test]
    fn snapping_wraps_and_rejects_outside_points() {
        let grid = DomainGrid::<f64>::new(2, 1.0, 4).unwrap();
        let (node, dist) = grid.snap(&[0.99, 0.3]).unwrap();
        assert_eq!(grid.node(node), vec![0, 1]);
        assert_relative_eq!(dist, (0.01f64 * 0.01 + 0.05 * 0.05).sqrt(), epsilon = 1e-12);
        assert!(grid.snap(&[1.2, 0.0]).is_err());
        assert!(grid.snap(&[0.2]).is_err());
    }

    #[test]
    fn parameter_validation() {
        assert!(SobolevParams::new(0.4, 2.0, 1).is_err());
        assert!(SobolevParams::new(0.6, 2.0, 1).is_ok());
        assert!(SobolevParams::new(1.0, 1.0, 1).is_err());
        assert!(SobolevParams::new(1.0, 2.0, 2).is_err());
        assert!(DomainGrid::<f64>::new(1, 1.0, 1).is_err());
        assert!(DomainGrid::<f64>::with_cap(3, 1.0, 20, 1000).is_err());
        assert!(DomainGrid::<f64>::new(2, -1.0, 4).is_err());
    }

    #[test]
    fn unresolved_frequencies_are_rejected() {
        let grid = DomainGrid::<f64>::new(1, 1.0, 8).unwrap();
        let poly = BandLimited::new(1.0, vec![TrigTerm { frequency: vec![4], cos: 1.0, sin: 0.0 }]).unwrap();
        assert!(poly.sample(&grid).is_err());
    }

    #[test]
    fn f32_round_trip() {
        let grid = DomainGrid::<f32>::new(1, 1.0, 16).unwrap();
        let t = BesselTransform::new(&grid, 1.0f32).unwrap();
        let f = grid.sample(|x| (2.0 * std::f32::consts::PI * x[0]).sin()).unwrap();
        let back = t.lower(&t.lift(&f).unwrap()).unwrap();
        for (a, b) in back.values().iter().zip(f.values()) {
            assert!((a - b).abs() < 1e-5);
        }
    }
}
