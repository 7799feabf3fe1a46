//! The floating-point scalar abstraction shared by every algorithm in the crate.

use std::fmt::{Debug, Display};

use nalgebra::RealField;
use num_traits::{FromPrimitive, ToPrimitive};

/// Real scalar the algorithms are generic over: `f32` or `f64`.
///
/// All arithmetic comes from [`RealField`]; num-traits supplies the lossless
/// conversions used for literals and reporting.
pub trait Scalar: RealField + Copy + FromPrimitive + ToPrimitive + Debug + Display {
    /// Converts an `f64` literal into the scalar type.
    #[inline]
    fn of(x: f64) -> Self {
        nalgebra::convert(x)
    }

    #[inline]
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("usize is representable as a float")
    }

    /// Lossy conversion for reporting and error payloads.
    #[inline]
    fn as_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
