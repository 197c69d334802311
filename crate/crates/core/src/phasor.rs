//! Rectangular complex quantities: the state variables of the split circuit.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A complex voltage or current kept as its real and imaginary parts.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SplitPhasor<T> {
    pub re: T,
    pub im: T,
}

impl<T: Scalar> SplitPhasor<T> {
    pub fn new(re: T, im: T) -> Self {
        Self { re, im }
    }

    /// Constructor that rejects NaN/Inf parts.
    pub fn try_new(re: T, im: T) -> Result<Self> {
        let p = Self { re, im };
        p.check_finite("phasor")?;
        Ok(p)
    }

    pub fn zero() -> Self {
        Self::new(T::zero(), T::zero())
    }

    pub fn from_polar(magnitude: T, angle: T) -> Self {
        Self::new(magnitude * angle.cos(), magnitude * angle.sin())
    }

    pub fn magnitude(self) -> T {
        self.re.hypot(self.im)
    }

    pub fn norm_sqr(self) -> T {
        self.re * self.re + self.im * self.im
    }

    /// Angle in radians, measured from the real axis.
    pub fn angle(self) -> T {
        self.im.atan2(self.re)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }

    pub(crate) fn check_finite(self, what: &str) -> Result<()> {
        if self.is_finite() {
            Ok(())
        } else {
            Err(Error::NonFinite { what: what.into() })
        }
    }

    pub fn scale(self, k: T) -> Self {
        Self::new(self.re * k, self.im * k)
    }

    /// Rotate by `theta` radians.
    pub fn rotate(self, theta: T) -> Self {
        let (s, c) = theta.sin_cos();
        Self::new(self.re * c - self.im * s, self.re * s + self.im * c)
    }

    pub fn to_complex(self) -> Complex<T> {
        Complex::new(self.re, self.im)
    }

    /// Complex power `V · conj(I)` seen by a device drawing `current` at `self`.
    pub fn power(self, current: Self) -> (T, T) {
        (self.re * current.re + self.im * current.im, self.im * current.re - self.re * current.im)
    }
}

impl<T: Scalar> From<Complex<T>> for SplitPhasor<T> {
    fn from(c: Complex<T>) -> Self {
        Self::new(c.re, c.im)
    }
}

impl<T: Scalar> Add for SplitPhasor<T> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.re + o.re, self.im + o.im)
    }
}

impl<T: Scalar> Sub for SplitPhasor<T> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.re - o.re, self.im - o.im)
    }
}

impl<T: Scalar> Neg for SplitPhasor<T> {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.re, -self.im)
    }
}

impl<T: Scalar> Mul for SplitPhasor<T> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        Self::new(self.re * o.re - self.im * o.im, self.re * o.im + self.im * o.re)
    }
}
