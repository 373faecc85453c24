//! Scalar abstractions shared by the metric and loss kernels.
//!
//! Metrics only need field arithmetic and an ordering, so they run over
//! exact rationals as well as floats. The loss kernel needs logarithms and
//! is restricted to floating point.

use std::fmt::Debug;

use num_traits::{Float, FromPrimitive, Num, Signed, ToPrimitive};

/// Signed field-like scalar: `+ - * /`, a partial order and conversion from counts.
pub trait Scalar:
    Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
    fn from_count(n: usize) -> Self {
        Self::from_usize(n).expect("count representable in scalar type")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Num + Signed + Copy + PartialOrd + FromPrimitive + ToPrimitive + Debug + Send + Sync + 'static
{
}

/// Floating-point scalar used by the loss kernel.
pub trait RealScalar: Scalar + Float {
    /// Probability clamp used by mention losses.
    fn prob_epsilon() -> Self {
        Self::from_f64(1e-7).expect("epsilon representable")
    }

    fn lit(x: f64) -> Self {
        Self::from_f64(x).expect("literal representable")
    }
}

impl RealScalar for f32 {}
impl RealScalar for f64 {}
