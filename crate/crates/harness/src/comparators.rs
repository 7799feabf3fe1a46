//! Explicit comparators: every norm is exact, never estimated.

use std::sync::Arc;

use blaar_core::{BandLimited, DualVector64, Signal64};
use nalgebra::{DMatrix, DVector};

use crate::config::ComparatorSpec;
use crate::error::{HarnessError, Result};
use crate::generate::{data_rng, random_band_limited, random_dual, scale_function, FunctionData, LatticeData};

#[derive(Debug, Clone)]
pub enum ComparatorKind {
    Dual(DualVector64),
    Function(BandLimited<f64>),
}

#[derive(Debug, Clone)]
pub struct Comparator {
    pub id: String,
    pub kind: ComparatorKind,
}

/// Seed stream reserved for comparator draws.
const COMPARATOR_STREAM: u64 = 7;

/// `argmin_w Σ_t (y_t - ∫ w x_t dμ)² + λ‖w‖²_2`, as a dual vector.
pub fn ridge_fit(signals: &[Signal64], outcomes: &[f64], lambda: f64, signal_exponent: f64) -> Result<DualVector64> {
    let space = signals.first().map(|s| Arc::clone(s.space())).ok_or_else(|| HarnessError::config("no signals"))?;
    let mu = space.weights();
    let design = DMatrix::from_fn(signals.len(), space.len(), |t, k| mu[k] * signals[t].values()[k]);
    let y = DVector::from_column_slice(outcomes);
    let normal = design.transpose() * &design + DMatrix::identity(space.len(), space.len()) * lambda;
    let rhs = design.transpose() * y;
    let w = normal
        .cholesky()
        .ok_or(blaar_core::Error::NotPositiveDefinite)?
        .solve(&rhs);
    Ok(DualVector64::for_signal_exponent(w.iter().copied().collect(), signal_exponent, space)?)
}

pub fn lattice_comparators(data: &LatticeData, spec: &ComparatorSpec, seed: u64, ridge: f64) -> Result<Vec<Comparator>> {
    let mut rng = data_rng(seed, COMPARATOR_STREAM);
    let mut out = Vec::new();
    let push = |out: &mut Vec<Comparator>, id: String, f: DualVector64| out.push(Comparator { id, kind: ComparatorKind::Dual(f) });
    if spec.zero {
        push(&mut out, "zero".into(), DualVector64::for_signal_exponent(vec![0.0; data.space.len()], data.signal_exponent, Arc::clone(&data.space))?);
    }
    if spec.generator {
        if let Some(g) = &data.generator {
            push(&mut out, "generator".into(), g.clone());
            for (i, s) in spec.scales.iter().enumerate() {
                push(&mut out, format!("generator_x{s}_{i}"), g.scaled(*s));
            }
        }
    }
    if spec.ridge_fit {
        push(&mut out, "ridge_fit".into(), ridge_fit(&data.signals, &data.outcomes, ridge, data.signal_exponent)?);
    }
    for i in 0..spec.random {
        let scale = if spec.scales.is_empty() { 1.0 } else { spec.scales[i % spec.scales.len()] };
        let f = random_dual(&mut rng, data.signal_exponent, &data.space)?.scaled(scale);
        push(&mut out, format!("random_{i}"), f);
    }
    for (i, values) in spec.explicit.iter().enumerate() {
        let f = DualVector64::for_signal_exponent(values.clone(), data.signal_exponent, Arc::clone(&data.space))?;
        push(&mut out, format!("explicit_{i}"), f);
    }
    Ok(out)
}

pub fn function_comparators(data: &FunctionData, spec: &ComparatorSpec, seed: u64, max_frequency: i64) -> Result<Vec<Comparator>> {
    if !spec.explicit.is_empty() {
        return Err(HarnessError::config("explicit dual vectors are not supported on grid spaces"));
    }
    let mut rng = data_rng(seed, COMPARATOR_STREAM);
    let mut out = Vec::new();
    let push = |out: &mut Vec<Comparator>, id: String, f: BandLimited<f64>| out.push(Comparator { id, kind: ComparatorKind::Function(f) });
    if spec.zero {
        push(&mut out, "zero".into(), BandLimited::new(data.grid.side(), Vec::new())?);
    }
    if spec.generator {
        if let Some(g) = &data.generator {
            push(&mut out, "generator".into(), g.clone());
            for (i, s) in spec.scales.iter().enumerate() {
                push(&mut out, format!("generator_x{s}_{i}"), scale_function(g, *s));
            }
        }
    }
    for i in 0..spec.random {
        let scale = if spec.scales.is_empty() { 1.0 } else { spec.scales[i % spec.scales.len()] };
        let f = random_band_limited(&mut rng, &data.grid, max_frequency)?;
        push(&mut out, format!("random_{i}"), scale_function(&f, scale));
    }
    Ok(out)
}
