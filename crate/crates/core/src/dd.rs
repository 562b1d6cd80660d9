//! Double-double real and complex arithmetic.
//!
//! A `Dd` is an unevaluated sum `hi + lo` with `|lo| ≤ ½ ulp(hi)`, giving
//! about 106 significant bits. Form evaluation runs in this precision so
//! that cancellation inside long vertex products stays below double
//! rounding.

use crate::jet::Scalar;
use num_complex::Complex64 as C64;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Dd {
    pub hi: f64,
    pub lo: f64,
}

fn two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    let bb = s - a;
    (s, (a - (s - bb)) + (b - bb))
}

fn quick_two_sum(a: f64, b: f64) -> (f64, f64) {
    let s = a + b;
    (s, b - (s - a))
}

#[cfg(target_feature = "fma")]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    (p, a.mul_add(b, -p))
}

/// Veltkamp split into two 26-bit halves.
#[cfg(not(target_feature = "fma"))]
fn split(a: f64) -> (f64, f64) {
    let t = 134217729.0 * a;
    let hi = t - (t - a);
    (hi, a - hi)
}

/// Dekker's exact product; `mul_add` would fall back to a slow libm call
/// without hardware FMA.
#[cfg(not(target_feature = "fma"))]
fn two_prod(a: f64, b: f64) -> (f64, f64) {
    let p = a * b;
    let (ah, al) = split(a);
    let (bh, bl) = split(b);
    (p, ((ah * bh - p) + ah * bl + al * bh) + al * bl)
}

impl Dd {
    pub const ZERO: Dd = Dd { hi: 0.0, lo: 0.0 };

    pub fn new(x: f64) -> Dd {
        Dd { hi: x, lo: 0.0 }
    }

    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }
}

impl Add for Dd {
    type Output = Dd;
    fn add(self, o: Dd) -> Dd {
        let (s, e) = two_sum(self.hi, o.hi);
        let (t, f) = two_sum(self.lo, o.lo);
        let (s, e) = quick_two_sum(s, e + t);
        let (hi, lo) = quick_two_sum(s, e + f);
        Dd { hi, lo }
    }
}

impl Neg for Dd {
    type Output = Dd;
    fn neg(self) -> Dd {
        Dd { hi: -self.hi, lo: -self.lo }
    }
}

impl Sub for Dd {
    type Output = Dd;
    fn sub(self, o: Dd) -> Dd {
        self + (-o)
    }
}

impl Mul for Dd {
    type Output = Dd;
    fn mul(self, o: Dd) -> Dd {
        let (p, e) = two_prod(self.hi, o.hi);
        let (hi, lo) = quick_two_sum(p, e + (self.hi * o.lo + self.lo * o.hi));
        Dd { hi, lo }
    }
}

impl Div for Dd {
    type Output = Dd;
    fn div(self, o: Dd) -> Dd {
        let q1 = self.hi / o.hi;
        let r = self - o * Dd::new(q1);
        let q2 = r.hi / o.hi;
        let r = r - o * Dd::new(q2);
        let q3 = r.hi / o.hi;
        let (hi, lo) = quick_two_sum(q1, q2);
        Dd { hi, lo } + Dd::new(q3)
    }
}

/// Complex number with double-double parts.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Cdd {
    pub re: Dd,
    pub im: Dd,
}

impl Cdd {
    pub fn norm_sqr(self) -> Dd {
        self.re * self.re + self.im * self.im
    }

    fn conj(self) -> Cdd {
        Cdd { re: self.re, im: -self.im }
    }
}

impl From<C64> for Cdd {
    fn from(z: C64) -> Cdd {
        Cdd { re: Dd::new(z.re), im: Dd::new(z.im) }
    }
}

impl From<Cdd> for C64 {
    fn from(z: Cdd) -> C64 {
        C64::new(z.re.to_f64(), z.im.to_f64())
    }
}

impl Add for Cdd {
    type Output = Cdd;
    fn add(self, o: Cdd) -> Cdd {
        Cdd { re: self.re + o.re, im: self.im + o.im }
    }
}

impl AddAssign for Cdd {
    fn add_assign(&mut self, o: Cdd) {
        *self = *self + o;
    }
}

impl Sub for Cdd {
    type Output = Cdd;
    fn sub(self, o: Cdd) -> Cdd {
        Cdd { re: self.re - o.re, im: self.im - o.im }
    }
}

impl Neg for Cdd {
    type Output = Cdd;
    fn neg(self) -> Cdd {
        Cdd { re: -self.re, im: -self.im }
    }
}

impl Mul for Cdd {
    type Output = Cdd;
    fn mul(self, o: Cdd) -> Cdd {
        Cdd { re: self.re * o.re - self.im * o.im, im: self.re * o.im + self.im * o.re }
    }
}

impl Div for Cdd {
    type Output = Cdd;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Cdd) -> Cdd {
        let n = o.norm_sqr();
        let p = self * o.conj();
        Cdd { re: p.re / n, im: p.im / n }
    }
}

impl Scalar for Cdd {
    fn from_c64(z: C64) -> Self {
        Cdd::from(z)
    }
    fn value(&self) -> C64 {
        C64::from(*self)
    }
    fn recip(self) -> Self {
        Cdd::from(C64::new(1.0, 0.0)) / self
    }
    /// Principal branch: one Newton step from the double-precision root.
    fn sqrt(self) -> Self {
        let s0 = Cdd::from(self.value().sqrt());
        if s0 == Cdd::default() {
            return s0;
        }
        let half = Cdd::from(C64::new(0.5, 0.0));
        half * (s0 + self / s0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_bits_lost_in_double() {
        // (1 + 2⁻⁶⁰) − 1 vanishes in double precision.
        let tiny = 2f64.powi(-60);
        let x = Dd::new(1.0) + Dd::new(tiny) - Dd::new(1.0);
        assert_eq!(x.to_f64(), tiny);
        let third = Dd::new(1.0) / Dd::new(3.0);
        let back = third * Dd::new(3.0) - Dd::new(1.0);
        assert!(back.to_f64().abs() < 1e-31);
    }

    #[test]
    fn complex_ops_agree_with_double() {
        let a = C64::new(1.3, -0.7);
        let b = C64::new(-0.4, 2.1);
        let (x, y) = (Cdd::from(a), Cdd::from(b));
        assert!((C64::from(x * y) - a * b).norm() < 1e-15);
        assert!((C64::from(x / y) - a / b).norm() < 1e-15);
        let s = x.sqrt();
        assert!((C64::from(s) - a.sqrt()).norm() < 1e-15);
        let r = s * s - x;
        assert!(C64::from(r).norm() < 1e-30);
    }
}
