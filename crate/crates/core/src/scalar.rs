//! Real-valued threshold types.

use std::fmt::{Debug, Display};
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating point type used for feature values and split thresholds: `f32` or `f64`.
pub trait Scalar:
    num_traits::Float
    + num_traits::FromPrimitive
    + FromStr
    + Display
    + Debug
    + Default
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// A value strictly greater than `self`, used to pick a witness inside an
    /// interval that is unbounded above.
    fn step_above(self) -> Self {
        self + self.abs().max(Self::one())
    }

    /// Total order for finite values. Callers validate finiteness first.
    fn cmp_finite(&self, other: &Self) -> std::cmp::Ordering {
        self.partial_cmp(other).expect("finite scalar")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
