//! Scalar math routed through `libm`, so results are identical with and
//! without `std`.

use crate::Complex;

pub use core::f64::consts::{LN_2, PI};

#[inline]
pub fn exp(x: f64) -> f64 {
    libm::exp(x)
}

#[inline]
pub fn ln(x: f64) -> f64 {
    libm::log(x)
}

#[inline]
pub fn sqrt(x: f64) -> f64 {
    libm::sqrt(x)
}

#[inline]
pub fn hypot(x: f64, y: f64) -> f64 {
    libm::hypot(x, y)
}

#[inline]
pub fn atan2(y: f64, x: f64) -> f64 {
    libm::atan2(y, x)
}

#[inline]
pub fn ceil(x: f64) -> f64 {
    libm::ceil(x)
}

#[inline]
pub fn floor(x: f64) -> f64 {
    libm::floor(x)
}

/// `(cos v, sin v)`, exact at the quadrantal angles `0, ±π/2, π`.
///
/// Exactness there is what lets `1 + e^{iπ}` cancel to an exact zero.
pub fn cos_sin(v: f64) -> (f64, f64) {
    const HALF_PI: f64 = PI / 2.0;
    if v == 0.0 {
        (1.0, 0.0)
    } else if v == PI || v == -PI {
        (-1.0, 0.0)
    } else if v == HALF_PI {
        (0.0, 1.0)
    } else if v == -HALF_PI {
        (0.0, -1.0)
    } else {
        (libm::cos(v), libm::sin(v))
    }
}

/// Modulus of a complex number without intermediate overflow.
#[inline]
pub fn abs(z: Complex) -> f64 {
    hypot(z.re, z.im)
}

/// Squared modulus.
#[inline]
pub fn norm_sqr(z: Complex) -> f64 {
    z.re * z.re + z.im * z.im
}

/// Largest of `|re|` and `|im|`; a cheap magnitude bound used for scaling.
#[inline]
pub fn max_component(z: Complex) -> f64 {
    let (a, b) = (z.re.abs(), z.im.abs());
    if a > b {
        a
    } else {
        b
    }
}

/// Relative difference `|a - b| / max(|a|, |b|, floor)`.
pub fn rel_diff(a: Complex, b: Complex, floor: f64) -> f64 {
    let scale = abs(a).max(abs(b)).max(floor);
    abs(a - b) / scale
}
