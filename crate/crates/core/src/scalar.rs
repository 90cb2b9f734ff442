//! Scalar abstraction for the numeric core.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Floating-point scalar the solvers are generic over: `f32` or `f64`.
///
/// Random sampling is always performed in `f64` and narrowed through
/// [`Scalar::from_f64_lossy`], so an `f32` run reproduces the `f64` stream
/// up to rounding.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    fn from_f64_lossy(value: f64) -> Self {
        Self::from_f64(value).expect("finite f64 converts to any Scalar")
    }

    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("any Scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
