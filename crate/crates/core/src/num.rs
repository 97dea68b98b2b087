//! Scalar abstraction for the numerical core.
//!
//! Everything in this crate that is plain arithmetic is generic over [`Real`],
//! so the same expansion machinery runs in `f32` or `f64`. The crate root
//! exports `f64` type aliases for the common case.

use std::fmt::{Debug, Display};

use num_traits::{Float, FloatConst, FromPrimitive, ToPrimitive};

/// Floating-point scalar used throughout the crate.
///
/// Beyond the `num-traits` bundle this adds the error functions, which the
/// normal CDF and its tails are built on.
pub trait Real:
    Float + FloatConst + FromPrimitive + ToPrimitive + Debug + Display + Send + Sync + 'static
{
    fn erf(self) -> Self;
    fn erfc(self) -> Self;

    /// Shorthand for lifting an `f64` literal into the scalar type.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("literal representable in scalar type")
    }

    #[inline]
    fn from_int(v: usize) -> Self {
        Self::from_usize(v).expect("integer representable in scalar type")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().expect("scalar convertible to f64")
    }
}

impl Real for f64 {
    #[inline]
    fn erf(self) -> Self {
        libm::erf(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfc(self)
    }
}

impl Real for f32 {
    #[inline]
    fn erf(self) -> Self {
        libm::erff(self)
    }
    #[inline]
    fn erfc(self) -> Self {
        libm::erfcf(self)
    }
}

/// Standard normal density.
#[inline]
pub fn norm_pdf<T: Real>(x: T) -> T {
    let half = T::of(0.5);
    (-half * x * x).exp() / (T::TAU()).sqrt()
}

/// Standard normal CDF, accurate in both tails via `erfc`.
#[inline]
pub fn norm_cdf<T: Real>(x: T) -> T {
    let half = T::of(0.5);
    half * (-x / T::SQRT_2()).erfc()
}

/// Probabilists' Hermite polynomial `He_n(x)`.
///
/// Satisfies `He_{n+1} = x He_n - n He_{n-1}`.
pub fn hermite_prob<T: Real>(n: usize, x: T) -> T {
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = x;
    for m in 1..n {
        let next = x * cur - T::from_int(m) * prev;
        prev = cur;
        cur = next;
    }
    cur
}

/// Physicists' Hermite polynomial `h_n(x)`.
///
/// Satisfies `h_{n+1} = 2x h_n - 2n h_{n-1}`.
pub fn hermite_phys<T: Real>(n: usize, x: T) -> T {
    let two = T::of(2.0);
    let mut prev = T::one();
    if n == 0 {
        return prev;
    }
    let mut cur = two * x;
    for m in 1..n {
        let next = two * x * cur - two * T::from_int(m) * prev;
        prev = cur;
        cur = next;
    }
    cur
}
