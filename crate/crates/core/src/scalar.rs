//! Floating-point abstraction shared by every numerical module.
//!
//! All models are written against [`Real`] so that the same code runs in
//! `f64` (the default used by the harness) and `f32` (handy for checking
//! how sensitive a result is to working precision).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_complex::Complex;
use num_traits::{Float, FloatConst, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used throughout the crate: `f32` or `f64`.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + ToPrimitive
    + NumAssign
    + Sum
    + Default
    + Debug
    + Display
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal. Every `f64` is representable (possibly
    /// rounded) in both supported types, so this never fails.
    fn lit(x: f64) -> Self;

    /// Converts a count.
    fn from_count(n: usize) -> Self {
        Self::lit(n as f64)
    }

    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }

    /// Machine epsilon of the type.
    fn eps() -> Self {
        Self::epsilon()
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
}

/// Complex number over a [`Real`] scalar.
pub type Cplx<T> = Complex<T>;

/// `e^{-iθ}`.
#[inline]
pub(crate) fn expi_neg<T: Real>(theta: T) -> Cplx<T> {
    Cplx::new(theta.cos(), -theta.sin())
}
