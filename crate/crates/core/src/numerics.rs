//! Log-polar complex arithmetic.
//!
//! A nonzero complex number `x = e^{u + iv}` is stored as its log-modulus `u`
//! and principal argument `v ∈ (−π, π]`. Zero is the canonical pair `(−∞, 0)`.
//! Sums use the max-shift trick: every term is rescaled by `e^{−u_max}` before
//! it is brought back to linear space, so no intermediate can overflow.

use alloc::vec::Vec;
use core::cmp::Ordering;

use thiserror::Error;

use crate::math::{self, PI};
use crate::Complex;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("log-sum-exp over an empty list of terms")]
    EmptyTerms,
    #[error("non-finite complex value ({re}, {im}) has no log-polar form")]
    NonFinite { re: f64, im: f64 },
    #[error("invalid log-polar pair (u = {u}, v = {v})")]
    InvalidPair { u: f64, v: f64 },
}

/// A complex number as (log-modulus, argument).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogComplex {
    u: f64,
    v: f64,
}

/// Wraps an angle into `(−π, π]`.
pub fn wrap_angle(v: f64) -> f64 {
    if v > -PI && v <= PI {
        return v;
    }
    let turns = math::ceil((v - PI) / (2.0 * PI));
    let w = v - turns * 2.0 * PI;
    // Rounding in the subtraction can land exactly on −π or just past π.
    if w <= -PI {
        w + 2.0 * PI
    } else if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

impl LogComplex {
    pub const ZERO: LogComplex = LogComplex {
        u: f64::NEG_INFINITY,
        v: 0.0,
    };
    pub const ONE: LogComplex = LogComplex { u: 0.0, v: 0.0 };

    /// Builds a pair, wrapping the argument. `u = −∞` yields canonical zero.
    pub fn new(u: f64, v: f64) -> Result<Self, NumericsError> {
        if u.is_nan() || u == f64::INFINITY || !v.is_finite() {
            return Err(NumericsError::InvalidPair { u, v });
        }
        if u == f64::NEG_INFINITY {
            return Ok(Self::ZERO);
        }
        Ok(Self { u, v: wrap_angle(v) })
    }

    /// Positive real number given by its logarithm.
    pub fn from_ln(u: f64) -> Self {
        debug_assert!(!u.is_nan() && u != f64::INFINITY);
        if u == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            Self { u, v: 0.0 }
        }
    }

    /// Converts from cartesian form.
    pub fn from_complex(x: Complex) -> Result<Self, NumericsError> {
        if !x.re.is_finite() || !x.im.is_finite() {
            return Err(NumericsError::NonFinite { re: x.re, im: x.im });
        }
        if x.re == 0.0 && x.im == 0.0 {
            return Ok(Self::ZERO);
        }
        let u = math::ln(math::abs(x));
        let mut v = math::atan2(x.im, x.re);
        if v == -PI {
            v = PI;
        }
        Ok(Self { u, v })
    }

    /// Converts back to cartesian form. Overflows to infinity for `u > ~709`.
    pub fn to_complex(self) -> Complex {
        if self.is_zero() {
            return Complex::new(0.0, 0.0);
        }
        let r = math::exp(self.u);
        let (c, s) = math::cos_sin(self.v);
        Complex::new(r * c, r * s)
    }

    pub fn ln_modulus(self) -> f64 {
        self.u
    }

    pub fn arg(self) -> f64 {
        self.v
    }

    pub fn is_zero(self) -> bool {
        self.u == f64::NEG_INFINITY
    }

    pub fn conj(self) -> Self {
        if self.is_zero() || self.v == PI {
            self
        } else {
            Self {
                u: self.u,
                v: -self.v,
            }
        }
    }
}

/// Product of two log-polar numbers: log-moduli add, arguments add mod 2π.
pub fn complex_log_product(a: LogComplex, b: LogComplex) -> LogComplex {
    if a.is_zero() || b.is_zero() {
        return LogComplex::ZERO;
    }
    LogComplex {
        u: a.u + b.u,
        v: wrap_angle(a.v + b.v),
    }
}

impl core::ops::Mul for LogComplex {
    type Output = LogComplex;

    fn mul(self, rhs: LogComplex) -> LogComplex {
        complex_log_product(self, rhs)
    }
}

/// Orders terms by descending log-modulus, then argument. Summation in this
/// order makes the result independent of the caller's term order.
fn canonical_order(a: &LogComplex, b: &LogComplex) -> Ordering {
    b.u.total_cmp(&a.u).then(a.v.total_cmp(&b.v))
}

/// `log(Σ_k e^{u_k + i v_k})` in log-polar form.
///
/// The shared factor `e^{u_max}` is pulled out, the shifted terms are summed
/// in linear space (canonical order, left to right), and the modulus of the
/// result goes back to log space. An exactly cancelling sum is canonical zero.
pub fn complex_log_sum_exp(terms: &[LogComplex]) -> Result<LogComplex, NumericsError> {
    if terms.is_empty() {
        return Err(NumericsError::EmptyTerms);
    }
    if terms.len() == 1 {
        return Ok(terms[0]);
    }
    let mut sorted: Vec<LogComplex> = terms.to_vec();
    sorted.sort_by(canonical_order);
    let u_max = sorted[0].u;
    if u_max == f64::NEG_INFINITY {
        return Ok(LogComplex::ZERO);
    }
    let mut acc = Complex::new(0.0, 0.0);
    for t in sorted.iter().filter(|t| !t.is_zero()) {
        let r = math::exp(t.u - u_max);
        let (c, s) = math::cos_sin(t.v);
        acc += Complex::new(r * c, r * s);
    }
    if acc.re == 0.0 && acc.im == 0.0 {
        return Ok(LogComplex::ZERO);
    }
    let u = math::ln(math::abs(acc)) + u_max;
    let mut v = math::atan2(acc.im, acc.re);
    if v == -PI {
        v = PI;
    }
    Ok(LogComplex { u, v })
}

/// Real log-sum-exp over `ln`-values, `−∞` entries permitted.
pub fn log_sum_exp(values: &[f64]) -> f64 {
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return f64::NEG_INFINITY;
    }
    let s: f64 = values.iter().map(|&x| math::exp(x - max)).sum();
    math::ln(s) + max
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn lc(u: f64, v: f64) -> LogComplex {
        LogComplex::new(u, v).unwrap()
    }

    #[test]
    fn single_term_is_identity() {
        let t = lc(1.25, -0.5);
        assert_eq!(complex_log_sum_exp(&[t]).unwrap(), t);
    }

    #[test]
    fn opposite_terms_cancel_to_canonical_zero() {
        let r = complex_log_sum_exp(&[lc(0.0, 0.0), lc(0.0, PI)]).unwrap();
        assert!(r.is_zero());
        assert_eq!(r.arg(), 0.0);
    }

    #[test]
    fn three_plus_four_i() {
        let r = complex_log_sum_exp(&[lc(math::ln(3.0), 0.0), lc(math::ln(4.0), PI / 2.0)]).unwrap();
        // Linear space: 3 + 4i has modulus 5 and argument atan2(4, 3).
        assert!((r.ln_modulus() - math::ln(5.0)).abs() < 1e-15);
        assert!((r.arg() - 0.927_295_218_001_612_2).abs() < 1e-15);
    }

    #[test]
    fn empty_is_an_error() {
        assert_eq!(complex_log_sum_exp(&[]), Err(NumericsError::EmptyTerms));
    }

    #[test]
    fn all_zero_terms() {
        let r = complex_log_sum_exp(&[LogComplex::ZERO, LogComplex::ZERO]).unwrap();
        assert!(r.is_zero());
    }

    #[test]
    fn product_examples() {
        let i = lc(0.0, PI / 2.0);
        assert_eq!(complex_log_product(i, i), lc(0.0, PI));
        assert!(complex_log_product(lc(3.0, 1.0), LogComplex::ZERO).is_zero());

        let p = complex_log_product(lc(math::ln(2.0), 0.3), lc(math::ln(5.0), 3.0));
        assert!((p.ln_modulus() - math::ln(10.0)).abs() < 1e-15);
        assert!((p.arg() - (3.3 - 2.0 * PI)).abs() < 1e-15);
        assert!((p.arg() - (-2.983_185_307_179_586)).abs() < 1e-12);
        let lin = Complex::from_polar(2.0, 0.3) * Complex::from_polar(5.0, 3.0);
        assert!(math::rel_diff(p.to_complex(), lin, 0.0) < 1e-14);
    }

    #[test]
    fn conversions() {
        assert_eq!(LogComplex::from_complex(Complex::new(1.0, 0.0)).unwrap(), lc(0.0, 0.0));
        let z = LogComplex::from_complex(Complex::new(3.0, 2.0)).unwrap();
        assert!((z.ln_modulus() - 0.5 * math::ln(13.0)).abs() < 1e-15);
        assert!((z.arg() - math::atan2(2.0, 3.0)).abs() < 1e-15);
        assert!(LogComplex::from_complex(Complex::new(0.0, 0.0)).unwrap().is_zero());
        assert!(LogComplex::from_complex(Complex::new(f64::NAN, 0.0)).is_err());
        // −1 with a negative-zero imaginary part still maps to +π.
        assert_eq!(LogComplex::from_complex(Complex::new(-1.0, -0.0)).unwrap().arg(), PI);
    }

    #[test]
    fn wrap_angle_range() {
        assert_eq!(wrap_angle(PI), PI);
        assert_eq!(wrap_angle(-PI), PI);
        assert!((wrap_angle(7.0 * PI) - PI).abs() < 1e-12);
        for k in -50..50 {
            let w = wrap_angle(0.37 * k as f64);
            assert!(w > -PI && w <= PI);
        }
    }

    #[test]
    fn round_trip_random() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100_000 {
            let x = Complex::new(rng.gen_range(-1e3..1e3), rng.gen_range(-1e3..1e3));
            let back = LogComplex::from_complex(x).unwrap().to_complex();
            assert!(math::rel_diff(back, x, 0.0) <= 1e-12);
        }
    }

    #[test]
    fn shift_identity_and_no_overflow() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..1000 {
            let n = rng.gen_range(1..8);
            let terms: Vec<LogComplex> = (0..n)
                .map(|_| lc(rng.gen_range(-20_480..20_480) as f64 / 1024.0, rng.gen_range(-PI..PI)))
                .collect();
            // Dyadic log-moduli and an integer shift keep `u_k + c` exact.
            let c = rng.gen_range(-10_000..10_000) as f64;
            let shifted: Vec<LogComplex> = terms.iter().map(|t| lc(t.ln_modulus() + c, t.arg())).collect();
            let a = complex_log_sum_exp(&terms).unwrap();
            let b = complex_log_sum_exp(&shifted).unwrap();
            assert!(b.ln_modulus().is_finite());
            assert!((b.ln_modulus() - a.ln_modulus() - c).abs() <= 1e-12 * (1.0 + c.abs()));
            assert!((wrap_angle(b.arg() - a.arg())).abs() <= 1e-12);
        }
    }

    #[test]
    fn permutation_invariance_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let mut terms: Vec<LogComplex> = (0..12)
            .map(|_| lc(rng.gen_range(-5.0..5.0), rng.gen_range(-PI..PI)))
            .collect();
        let a = complex_log_sum_exp(&terms).unwrap();
        terms.reverse();
        terms.swap(2, 7);
        assert_eq!(complex_log_sum_exp(&terms).unwrap(), a);
    }

    #[test]
    fn real_log_sum_exp() {
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
        assert!((log_sum_exp(&[1234.0, 1232.0]) - 1234.126_928_011_042_9).abs() < 1e-9);
    }
}
