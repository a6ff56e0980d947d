//! Scalar abstraction: the whole solver is generic over the floating-point
//! type through this trait, with `f64` as the default via the crate-root
//! aliases.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum<Self> + Debug + Display + Send + Sync + 'static
{
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum<T>
        + Debug
        + Display
        + Send
        + Sync
        + 'static
{
}

/// Shorthand for converting an `f64` constant into the working scalar.
#[inline]
pub fn real<F: Scalar>(x: f64) -> F {
    F::from_f64(x).expect("f64 constant must be representable in the scalar type")
}

/// Lossy conversion back to `f64` for reporting and serialization.
#[inline]
pub fn to_f64<F: Scalar>(x: F) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}
