//! Online square-loss regression that competes with linear functionals on
//! `ℓ_p^n` and on discretized `L_p(μ)` lattices.
//!
//! * [`aar`]: the Aggregating Algorithm for Regression on `R^n` and its regret bounds.
//! * [`kaar`]: the kernelized form driven by a Gram matrix.
//! * [`lewis`]: Lewis bases, the near-isometric embedding of a span of `L_p`
//!   signals into `ℓ_2^n`.
//! * [`blaar`]: the semi-online lattice learner and its bound evaluators.
//! * [`sobolev`]: Bessel-potential transforms reducing Sobolev-space learning
//!   on a periodic grid to the `L_p` case.
//! * [`perceptron`]: the second-order Perceptron on embedded features.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! below fix the common double-precision instantiation.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod aar;
pub mod blaar;
mod error;
pub mod kaar;
pub mod lattice;
pub mod lewis;
mod linalg;
pub mod perceptron;
mod scalar;
pub mod sobolev;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub use aar::{aar_bound_eq1, aar_bound_eq2, aar_bound_remark, run_aar, AarState};
pub use blaar::{
    blaar_run, blaar_run_with_basis, tuned_ridge, theorem1_bound, theorem2_bound, theorem3_bound, GameTrace,
    SemiOnlineGame,
};
pub use kaar::{kaar_bound, kaar_predict, kaar_simplified_bound, GramMatrix, KaarPredictor};
pub use lattice::{dual_exponent, lp_norm, norm_equiv_factor, pairing, DualVector, GameConfig, MeasureSpace, Signal};
pub use lewis::{max_independent_subset, solve_lewis, IndependentSubset, LewisBasis, LewisOptions};
pub use perceptron::{classify_run, hinge_loss, mistake_bound, sop_run, ClassifierState, ClassifyOutcome, MistakeBoundInputs};
pub use sobolev::{
    bessel_multiplier_apply, dual_signal, evaluation_constant, measure_sandwich, sobolev_blaar_run, sobolev_norm,
    BandLimited, BesselTransform, Direction, DomainGrid, SobolevParams, SobolevTrace, TrigTerm,
};

pub type MeasureSpace64 = MeasureSpace<f64>;
pub type Signal64 = Signal<f64>;
pub type DualVector64 = DualVector<f64>;
pub type GameConfig64 = GameConfig<f64>;
pub type AarState64 = AarState<f64>;
pub type GramMatrix64 = GramMatrix<f64>;
pub type LewisBasis64 = LewisBasis<f64>;
pub type SemiOnlineGame64 = SemiOnlineGame<f64>;
pub type GameTrace64 = GameTrace<f64>;
pub type DomainGrid64 = DomainGrid<f64>;
pub type SobolevParams64 = SobolevParams<f64>;
pub type ClassifierState64 = ClassifierState<f64>;

pub type Signal32 = Signal<f32>;
pub type AarState32 = AarState<f32>;
pub type LewisBasis32 = LewisBasis<f32>;
