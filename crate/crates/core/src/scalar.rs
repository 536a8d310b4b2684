//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar the library computes in. Implemented for `f32` and `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Debug
    + Display
    + Default
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly rounded) in `Self`.
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("f64 literal representable in scalar type")
    }

    /// Converts a count.
    fn count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// `x log2 x` with the `0 log 0 = 0` convention.
    fn xlog2x(self) -> Self {
        if self <= Self::zero() {
            Self::zero()
        } else {
            self * self.log2()
        }
    }
}

impl<T> Scalar for T where
    T: Float
        + FloatConst
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Shannon entropy in bits of a list of probabilities. Zero entries contribute nothing.
pub fn shannon_bits<T: Scalar>(probabilities: &[T]) -> T {
    let h = -probabilities.iter().map(|&p| p.xlog2x()).sum::<T>();
    // -0.0 and tiny negative rounding on single-atom inputs
    h.max(T::zero())
}
