//! Scalar abstraction shared by every numerical kernel in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use rustfft::FftNum;

/// Floating point type the spectral kernels are generic over (`f32` or `f64`).
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + FftNum
    + Default
    + Debug
    + Display
    + Sum
    + Send
    + Sync
    + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Converts an `f64` literal into `T`.
#[inline(always)]
pub fn lit<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("literal representable in target float")
}

/// Converts an integer wavenumber into `T`.
#[inline(always)]
pub fn from_int<T: Real>(k: i64) -> T {
    T::from_i64(k).expect("integer representable in target float")
}

/// `⟨a⟩ = sqrt(1 + a²)`.
#[inline(always)]
pub fn bracket<T: Real>(a: T) -> T {
    (T::one() + a * a).sqrt()
}

/// `⟨a, b⟩ = sqrt(1 + a² + b²)`.
#[inline(always)]
pub fn bracket2<T: Real>(a: T, b: T) -> T {
    (T::one() + a * a + b * b).sqrt()
}

/// `|a, b| = sqrt(a² + b²)`.
#[inline(always)]
pub fn pair_norm<T: Real>(a: T, b: T) -> T {
    a.hypot(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brackets() {
        assert_eq!(bracket(0.0_f64), 1.0);
        assert!((bracket2(1.0_f64, 1.0) - 3.0_f64.sqrt()).abs() < 1e-15);
        assert!((pair_norm(3.0_f32, 4.0) - 5.0).abs() < 1e-6);
    }
}
