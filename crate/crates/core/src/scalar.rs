//! Floating-point abstraction used throughout the model.
//!
//! Every physical routine is written against [`Scalar`] so the same code runs
//! in `f64` (the default everywhere) and `f32` (useful for embedded targets and
//! for checking that tolerances are not tuned to one precision).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Real scalar type: `f32` or `f64`.
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + Serialize
    + DeserializeOwned
    + 'static
{
    /// Converts an `f64` literal. Panics only for values the type cannot
    /// represent at all, which never happens for `f32`/`f64`.
    #[inline]
    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_usize_lossy(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    /// Lossy conversion used at I/O boundaries.
    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Relative tolerance that iterative solvers in this crate aim for.
    /// `1e-9` in double precision, loosened to what `f32` can resolve.
    fn solver_tolerance() -> Self {
        Self::lit(1e-9).max(Self::epsilon() * Self::lit(1024.0))
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
