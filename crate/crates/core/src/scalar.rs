//! Scalar abstraction for all rates, lengths and delays.

use std::fmt;
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the simulator: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + fmt::Debug
    + fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Lossless conversion from `f64` where the target permits, rounding
    /// otherwise (`f32`).
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 -> scalar conversion")
    }

    /// Widening conversion for reporting.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("scalar -> f64 conversion")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Speed of light in fiber, km/s.
pub const FIBER_SPEED_KM_PER_S: f64 = 200_000.0;

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn conversions_round_trip_for_f64() {
        let x = 1234.5678_f64;
        assert_eq!(f64::from_f64_lossy(x), x);
        assert_eq!(x.to_f64_lossy(), x);
    }

    #[test]
    fn f32_instantiation_compiles() {
        fn mean<F: Scalar>(a: F, b: F) -> F {
            (a + b) / F::from_f64_lossy(2.0)
        }
        assert_eq!(mean(1.0_f32, 3.0_f32), 2.0_f32);
    }
}
