//! Scalar abstraction for the numeric kernels.
//!
//! Everything that does floating-point work (mutual information, CRF
//! training, influence probabilities, ROC) is generic over [`Real`] so the
//! same code runs at `f32` or `f64`. The pipeline fixes `f64` through the
//! crate-root aliases.

use std::fmt::{Debug, Display};
use std::iter::Sum;

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    num_traits::Float + num_traits::FromPrimitive + num_traits::NumCast + Sum + Debug + Display + Send + Sync + 'static
{
}

impl Real for f32 {}
impl Real for f64 {}

/// Convert an `f64` constant into the working scalar.
pub fn real<T: Real>(x: f64) -> T {
    T::from_f64(x).expect("f64 constant representable in scalar type")
}

/// Convert an integer count into the working scalar.
pub fn count<T: Real>(n: u64) -> T {
    T::from_u64(n).expect("count representable in scalar type")
}
