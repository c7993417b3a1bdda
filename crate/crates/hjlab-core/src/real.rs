//! Scalar abstraction for the whole crate.
//!
//! All numerics are written against [`Real`], implemented for `f32` and
//! `f64`. Random draws are generated in `f64` and converted, so a given seed
//! produces the same trajectory up to rounding in either precision.

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Floating-point scalar used by grids, operators, solvers and simulators.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + std::iter::Sum
    + std::fmt::Debug
    + std::fmt::Display
    + std::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Lift an `f64` constant into the scalar type.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("constant not representable")
    }

    /// Lossy view as `f64`, for statistics and reporting.
    fn to64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// `base^e` for nonnegative bases via exp/log, with the zero base handled
/// explicitly so `|0|^q` never goes through `ln(0)`.
pub fn pow_pos<T: Real>(base: T, exponent: T) -> T {
    if base <= T::zero() {
        T::zero()
    } else {
        (exponent * base.ln()).exp()
    }
}

/// Euclidean norm of a small vector.
pub fn norm<T: Real>(v: &[T]) -> T {
    v.iter().map(|&x| x * x).sum::<T>().sqrt()
}

/// Dot product.
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}
