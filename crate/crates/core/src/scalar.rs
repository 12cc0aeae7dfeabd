//! Floating-point abstraction shared by every module.
//!
//! All physics in this crate is written against [`Scalar`], with
//! implementations for `f32` and `f64`. The crate root exposes `f64`
//! aliases for the common case.

use std::fmt::{Debug, Display, LowerExp};

use num_traits::{Float, FloatConst, FromPrimitive, NumAssign};

/// Real scalar type used for rates, frequencies and spectra.
pub trait Scalar:
    'static
    + Send
    + Sync
    + Float
    + FloatConst
    + FromPrimitive
    + NumAssign
    + Default
    + Debug
    + Display
    + LowerExp
{
}

impl Scalar for f32 {}
impl Scalar for f64 {}

/// Converts an `f64` literal into `T`.
///
/// Every `Scalar` can represent (a rounding of) any finite `f64`, so this
/// never fails for the constants used in this crate.
#[inline]
pub(crate) fn lit<T: Scalar>(x: f64) -> T {
    T::from_f64(x).expect("finite f64 literal representable in Scalar")
}

#[inline]
pub(crate) fn from_usize<T: Scalar>(n: usize) -> T {
    T::from_usize(n).expect("usize representable in Scalar")
}

/// Lossy view of a scalar as `f64`, for error payloads and reports.
#[inline]
pub(crate) fn to_f64<T: Scalar>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `10·log10(x)`, the power-ratio decibel convention.
#[inline]
pub fn power_db<T: Scalar>(x: T) -> T {
    lit::<T>(10.0) * x.log10()
}

/// `20·log10(x)`, the amplitude-ratio decibel convention.
#[inline]
pub fn amplitude_db<T: Scalar>(x: T) -> T {
    lit::<T>(20.0) * x.log10()
}
