//! Floating scalar abstraction: f32 or f64.

use num_traits::{Float, FromPrimitive, NumAssign, NumCast};
use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;

/// Scalar type the whole library is generic over.
///
/// Everything needed is already provided by `num-traits`; this trait only
/// bundles the bounds and adds a short literal constructor.
pub trait Scalar:
    Float
    + FromPrimitive
    + NumCast
    + NumAssign
    + Sum
    + Debug
    + Display
    + LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Panics on values unrepresentable in `Self`.
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("literal not representable in scalar type")
    }

    /// Lossy conversion back to `f64`, for diagnostics and output.
    fn to_f64_lossy(self) -> f64 {
        NumCast::from(self).unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + NumCast
        + NumAssign
        + Sum
        + Debug
        + Display
        + LowerExp
        + Send
        + Sync
        + 'static
{
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_roundtrip() {
        let a: f64 = Scalar::of(0.25);
        let b: f32 = Scalar::of(0.25);
        assert_eq!(a, 0.25);
        assert_eq!(b, 0.25f32);
        assert_eq!(a.to_f64_lossy(), 0.25);
    }
}
