//! Scalar abstraction shared by every solver in the crate.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst};

/// Floating-point type the solvers are generic over. Implemented for `f32`
/// and `f64`.
pub trait Scalar: Float + FloatConst + Sum + Debug + Display + Default + Send + Sync + 'static {
    /// Converts an `f64` literal into `Self`.
    fn lit(x: f64) -> Self {
        num_traits::cast(x).expect("f64 literal representable in scalar type")
    }

    /// An absolute tolerance of `x`, floored at a small multiple of the type's
    /// machine epsilon so that `f64` tolerances stay meaningful for `f32`.
    fn tol(x: f64) -> Self {
        Self::lit(x).max(Self::epsilon() * Self::lit(64.0))
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    fn from_usize(n: usize) -> Self {
        Self::lit(n as f64)
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Evenly spaced points `lo, lo + h, ..., hi` with `points >= 2`.
pub(crate) fn linspace<T: Scalar>(lo: T, hi: T, points: usize) -> Vec<T> {
    debug_assert!(points >= 2);
    let last = T::from_usize(points - 1);
    (0..points).map(|k| if k + 1 == points { hi } else { lo + (hi - lo) * T::from_usize(k) / last }).collect()
}
