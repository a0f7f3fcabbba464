//! Scalar abstraction over the floating-point type used by the whole crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;
use std::ops::{AddAssign, DivAssign, MulAssign, SubAssign};

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point scalar for robustness values, weights, rewards and policy
/// parameters. Implemented by `f32` and `f64`.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Sum
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + AddAssign
        + SubAssign
        + MulAssign
        + DivAssign
        + Sum
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Finite stand-in for an infinite robustness value: the robustness of the
/// true constant, and of a next-step reference past the end of a trajectory.
/// Far above any scenario-scale predicate magnitude and exactly representable
/// in both `f32` and `f64`.
pub const RHO_MAX: f64 = 1.0e6;

/// `RHO_MAX` converted into the working scalar type.
pub fn rho_max<T: Scalar>() -> T {
    convert(RHO_MAX)
}

/// Converts an `f64` constant into the working scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// scenario-scale constants this crate feeds through it.
pub fn convert<T: Scalar>(value: f64) -> T {
    T::from_f64(value).expect("scalar conversion")
}

/// Converts an integer count (distances, table sizes) into the scalar type.
pub fn convert_usize<T: Scalar>(value: usize) -> T {
    T::from_usize(value).expect("scalar conversion")
}
