//! Scalar abstraction shared by the single- and double-precision paths.

use std::fmt::{Debug, Display};

use nalgebra::RealField;

/// Floating-point type the renderer and optimizer are generic over.
///
/// `f32` is the production path; `f64` is the reference path used by
/// gradient checks.
pub trait Real: RealField + Copy + Default + Debug + Display + Send + Sync + 'static {
    fn lit(x: f64) -> Self;
    fn to_f64(self) -> f64;
    fn of_f32(x: f32) -> Self;
    fn as_f32(self) -> f32;
    fn is_finite_val(self) -> bool;
}

impl Real for f32 {
    #[inline]
    fn lit(x: f64) -> Self {
        x as f32
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }
    #[inline]
    fn of_f32(x: f32) -> Self {
        x
    }
    #[inline]
    fn as_f32(self) -> f32 {
        self
    }
    #[inline]
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
}

impl Real for f64 {
    #[inline]
    fn lit(x: f64) -> Self {
        x
    }
    #[inline]
    fn to_f64(self) -> f64 {
        self
    }
    #[inline]
    fn of_f32(x: f32) -> Self {
        x as f64
    }
    #[inline]
    fn as_f32(self) -> f32 {
        self as f32
    }
    #[inline]
    fn is_finite_val(self) -> bool {
        self.is_finite()
    }
}

/// Numerically stable logistic function.
#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    if x >= T::zero() {
        T::one() / (T::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (T::one() + e)
    }
}

/// Inverse of [`sigmoid`] for `p` in (0, 1).
#[inline]
pub fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}
