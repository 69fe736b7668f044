//! Scalar abstraction shared by the monotonization core.

use num_traits::{Float, FromPrimitive, ToPrimitive};
use std::fmt::{Debug, Display};
use std::str::FromStr;

/// Floating point scalar the grid, rearrangement, isotonic and band code is
/// generic over. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + Debug + Display + FromStr + Default + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar.
    fn of(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("f64 constant representable")
    }

    /// Converts a count into this scalar.
    fn of_usize(n: usize) -> Self {
        <Self as FromPrimitive>::from_usize(n).expect("count representable")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Relative tolerance used to decide whether an axis is equidistant.
pub const EQUIDISTANT_RTOL: f64 = 1e-9;

/// Absolute comparison tolerance, applied to values scaled by the diameter of
/// their range.
pub const VALUE_TOL: f64 = 1e-12;

/// Tolerance for `a <= b` relative to the magnitude of the operands.
pub(crate) fn le_tol<T: Scalar>(a: T, b: T, scale: T) -> bool {
    a <= b + T::of(VALUE_TOL) * scale.max(T::one())
}
