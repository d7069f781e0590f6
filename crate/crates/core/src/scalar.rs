// Copyright 2026 The nmr-chain Authors
// SPDX-License-Identifier: Apache-2.0

//! Scalar abstraction shared by every numerical module.
//!
//! All physics is written against [`Real`], which both `f32` and `f64`
//! satisfy. The crate root re-exports `f64` aliases for the common case.

use std::fmt::{Debug, Display};

use nalgebra::{Complex, ComplexField, RealField};
use num_traits::ToPrimitive;
use rustfft::FftNum;

/// Floating-point scalar usable for matrices, eigensolvers and FFTs.
pub trait Real: RealField + Copy + FftNum + ToPrimitive + Debug + Display + Default {}

impl<T> Real for T where T: RealField + Copy + FftNum + ToPrimitive + Debug + Display + Default {}

/// Complex counterpart of a [`Real`] scalar.
pub type C<T> = Complex<T>;

/// Converts an `f64` literal into `T`.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    ToPrimitive::to_f64(&x).unwrap_or(f64::NAN)
}

// `Signed` (via FftNum) and `ComplexField` both provide `abs`; these
// helpers keep call sites unambiguous.
#[inline]
pub fn abs<T: Real>(x: T) -> T {
    ComplexField::abs(x)
}

#[inline]
pub fn cabs<T: Real>(z: C<T>) -> T {
    ComplexField::modulus(z)
}

#[inline]
pub fn max<T: Real>(a: T, b: T) -> T {
    if a >= b {
        a
    } else {
        b
    }
}

#[inline]
pub fn min<T: Real>(a: T, b: T) -> T {
    if a <= b {
        a
    } else {
        b
    }
}

/// `exp(i*theta)`.
#[inline]
pub fn cis<T: Real>(theta: T) -> C<T> {
    C::new(theta.cos(), theta.sin())
}

#[inline]
pub fn two_pi<T: Real>() -> T {
    T::two_pi()
}
