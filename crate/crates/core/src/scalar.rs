//! Floating-point abstraction shared by every numeric routine in the crate.

use std::fmt::{Debug, Display, LowerExp};
use std::iter::Sum;
use std::num::ParseFloatError;
use std::str::FromStr;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type the estimator is generic over (`f32` or `f64`).
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Debug
    + Display
    + LowerExp
    + FromStr<Err = ParseFloatError>
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Products of modulation factors below this value are re-accumulated in log space.
    const UNDERFLOW_GUARD: f64;

    /// Converts an `f64` literal. Out-of-range values saturate to infinity.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    #[inline]
    fn underflow_guard() -> Self {
        Self::lit(Self::UNDERFLOW_GUARD)
    }
}

impl Scalar for f64 {
    const UNDERFLOW_GUARD: f64 = 1e-300;
}

impl Scalar for f32 {
    const UNDERFLOW_GUARD: f64 = 1e-36;
}
