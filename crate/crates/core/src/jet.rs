//! Truncated second-order Taylor jets along up to three tangent directions.
//!
//! A jet of `f` at `x` stores `f(x)`, the first directional derivatives
//! `∂_i f` and the symmetric second derivatives `∂_i ∂_j f` for
//! `i, j ∈ {0, 1, 2}`. Jets are generic over the base field so that form
//! evaluation can run in double-double precision.

use num_complex::Complex64 as C64;
use std::fmt::Debug;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

pub const DIRS: usize = 3;

const fn pair(i: usize, j: usize) -> usize {
    const IDX: [[usize; 3]; 3] = [[0, 1, 2], [1, 3, 4], [2, 4, 5]];
    IDX[i][j]
}

/// Ring of scalars the matrix layer is generic over.
pub trait Scalar:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn from_c64(z: C64) -> Self;
    fn value(&self) -> C64;
    fn recip(self) -> Self;
    fn sqrt(self) -> Self;

    fn zero() -> Self {
        Self::from_c64(C64::new(0.0, 0.0))
    }
    fn one() -> Self {
        Self::from_c64(C64::new(1.0, 0.0))
    }
    fn real(x: f64) -> Self {
        Self::from_c64(C64::new(x, 0.0))
    }
}

impl Scalar for C64 {
    fn from_c64(z: C64) -> Self {
        z
    }
    fn value(&self) -> C64 {
        *self
    }
    fn recip(self) -> Self {
        C64::new(1.0, 0.0) / self
    }
    fn sqrt(self) -> Self {
        C64::sqrt(self)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet<F = C64> {
    pub v: F,
    pub d1: [F; DIRS],
    pub d2: [F; 6],
}

impl<F: Scalar> Jet<F> {
    pub fn constant(v: F) -> Self {
        Jet { v, d1: [F::zero(); DIRS], d2: [F::zero(); 6] }
    }

    /// Jet of `x0 + Σ t_i u_i` in the parameters `t`.
    pub fn affine(x0: F, u: [F; DIRS]) -> Self {
        Jet { v: x0, d1: u, d2: [F::zero(); 6] }
    }

    /// Jet of `w · exp(Σ t_i u_i)`: a multiplicative coordinate whose
    /// logarithm moves along `u`.
    pub fn exp_of(w: F, u: [F; DIRS]) -> Self {
        let mut d2 = [F::zero(); 6];
        for i in 0..DIRS {
            for j in i..DIRS {
                d2[pair(i, j)] = w * u[i] * u[j];
            }
        }
        Jet { v: w, d1: [w * u[0], w * u[1], w * u[2]], d2 }
    }

    pub fn d2(&self, i: usize, j: usize) -> F {
        self.d2[pair(i, j)]
    }

    /// Derivative along direction `k`, keeping only what the truncation
    /// determines: the value and first derivatives of `∂_k f`.
    pub fn derivative(&self, k: usize) -> Jet<F> {
        Jet {
            v: self.d1[k],
            d1: [self.d2(k, 0), self.d2(k, 1), self.d2(k, 2)],
            d2: [F::zero(); 6],
        }
    }

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.v`.
    fn chain(&self, f0: F, f1: F, f2: F) -> Jet<F> {
        let mut out = Jet::constant(f0);
        for i in 0..DIRS {
            out.d1[i] = f1 * self.d1[i];
        }
        for i in 0..DIRS {
            for j in i..DIRS {
                out.d2[pair(i, j)] = f1 * self.d2(i, j) + f2 * self.d1[i] * self.d1[j];
            }
        }
        out
    }

    pub fn scale(&self, s: F) -> Jet<F> {
        Jet {
            v: self.v * s,
            d1: self.d1.map(|x| x * s),
            d2: self.d2.map(|x| x * s),
        }
    }

    /// The same jet with components rounded to double precision.
    pub fn to_c64(&self) -> Jet<C64> {
        Jet { v: self.v.value(), d1: self.d1.map(|x| x.value()), d2: self.d2.map(|x| x.value()) }
    }
}

impl<F: Scalar> Add for Jet<F> {
    type Output = Jet<F>;
    fn add(self, o: Jet<F>) -> Jet<F> {
        let mut r = self;
        r += o;
        r
    }
}

impl<F: Scalar> AddAssign for Jet<F> {
    fn add_assign(&mut self, o: Jet<F>) {
        self.v = self.v + o.v;
        for i in 0..DIRS {
            self.d1[i] = self.d1[i] + o.d1[i];
        }
        for k in 0..6 {
            self.d2[k] = self.d2[k] + o.d2[k];
        }
    }
}

impl<F: Scalar> Neg for Jet<F> {
    type Output = Jet<F>;
    fn neg(self) -> Jet<F> {
        Jet { v: -self.v, d1: self.d1.map(|x| -x), d2: self.d2.map(|x| -x) }
    }
}

impl<F: Scalar> Sub for Jet<F> {
    type Output = Jet<F>;
    fn sub(self, o: Jet<F>) -> Jet<F> {
        self + (-o)
    }
}

impl<F: Scalar> Mul for Jet<F> {
    type Output = Jet<F>;
    fn mul(self, o: Jet<F>) -> Jet<F> {
        let mut r = Jet::constant(self.v * o.v);
        for i in 0..DIRS {
            r.d1[i] = self.d1[i] * o.v + self.v * o.d1[i];
        }
        for i in 0..DIRS {
            for j in i..DIRS {
                r.d2[pair(i, j)] = self.d2(i, j) * o.v
                    + self.d1[i] * o.d1[j]
                    + self.d1[j] * o.d1[i]
                    + self.v * o.d2(i, j);
            }
        }
        r
    }
}

impl<F: Scalar> Div for Jet<F> {
    type Output = Jet<F>;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Jet<F>) -> Jet<F> {
        self * o.recip()
    }
}

impl<F: Scalar> Scalar for Jet<F> {
    fn from_c64(z: C64) -> Self {
        Jet::constant(F::from_c64(z))
    }
    fn value(&self) -> C64 {
        self.v.value()
    }
    fn recip(self) -> Self {
        let r = self.v.recip();
        self.chain(r, -(r * r), F::real(2.0) * r * r * r)
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, F::real(0.5) / s, -(F::real(0.25) / (s * self.v)))
    }
}

/// First-order jet along `N` directions: the value and its directional
/// derivatives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dual<F, const N: usize> {
    pub v: F,
    pub d: [F; N],
}

impl<F: Scalar, const N: usize> Dual<F, N> {
    /// Dual of `w · exp(Σ t_i u_i)` at `t = 0`.
    pub fn exp_of(w: F, u: [F; N]) -> Self {
        Dual { v: w, d: u.map(|x| w * x) }
    }
}

impl<F: Scalar, const N: usize> Add for Dual<F, N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x = *x + y;
        }
        Dual { v: self.v + o.v, d }
    }
}

impl<F: Scalar, const N: usize> Neg for Dual<F, N> {
    type Output = Self;
    fn neg(self) -> Self {
        Dual { v: -self.v, d: self.d.map(|x| -x) }
    }
}

impl<F: Scalar, const N: usize> Sub for Dual<F, N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl<F: Scalar, const N: usize> Mul for Dual<F, N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x = *x * o.v + self.v * y;
        }
        Dual { v: self.v * o.v, d }
    }
}

impl<F: Scalar, const N: usize> Div for Dual<F, N> {
    type Output = Self;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, o: Self) -> Self {
        self * o.recip()
    }
}

impl<F: Scalar, const N: usize> Scalar for Dual<F, N> {
    fn from_c64(z: C64) -> Self {
        Dual { v: F::from_c64(z), d: [F::zero(); N] }
    }
    fn value(&self) -> C64 {
        self.v.value()
    }
    fn recip(self) -> Self {
        let r = self.v.recip();
        let k = -(r * r);
        Dual { v: r, d: self.d.map(|x| k * x) }
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        let k = F::real(0.5) / s;
        Dual { v: s, d: self.d.map(|x| k * x) }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const Z: C64 = C64::new(0.0, 0.0);

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    // f(x, y, w) with every jet operation exercised.
    fn probe<T: Scalar>(x: T, y: T, w: T) -> T {
        let p = x * x * y - w * T::real(3.0) + x / (y + T::real(2.0));
        p * (w * x + T::real(3.0)).sqrt() + (y * y + T::one()).recip() - w.recip()
    }

    fn eval_at(base: [C64; 3], t: [C64; 3], dirs: &[[C64; 3]; 3]) -> C64 {
        let mut p = base;
        for (k, d) in dirs.iter().enumerate() {
            for i in 0..3 {
                p[i] += t[k] * d[i];
            }
        }
        probe(p[0], p[1], p[2])
    }

    // Keeps y² + 1, w and wx + 3 away from zero.
    fn probe_base(re: &[f64; 6]) -> [C64; 3] {
        [
            c(0.5 + 0.5 * re[0], 0.5 * re[1]),
            c(1.5 + 0.5 * re[2], 0.5 * re[3]),
            c(0.8 + 0.3 * re[4], 0.3 * re[5]),
        ]
    }

    fn jet_probe(base: [C64; 3], dirs: &[[C64; 3]; 3]) -> Jet {
        let var = |i: usize| Jet::affine(base[i], [dirs[0][i], dirs[1][i], dirs[2][i]]);
        probe(var(0), var(1), var(2))
    }

    #[test]
    fn constant_jet_matches_plain_value() {
        let base = [c(0.7, 0.2), c(-0.4, 1.1), c(1.3, -0.5)];
        let j = probe(Jet::constant(base[0]), Jet::constant(base[1]), Jet::constant(base[2]));
        assert_eq!(j.v, probe(base[0], base[1], base[2]));
        assert!(j.d1.iter().chain(j.d2.iter()).all(|d| *d == Z));
    }

    #[test]
    fn exp_of_is_exponential_of_affine() {
        let u = [c(0.3, -0.1), c(1.0, 0.5), c(-0.7, 0.0)];
        let w = c(1.5, -0.5);
        let a = Jet::exp_of(w, u);
        let f = |t: [f64; 3]| w * (u[0] * t[0] + u[1] * t[1] + u[2] * t[2]).exp();
        assert_eq!(a.v, w);
        let h = 1e-4;
        for i in 0..3 {
            let mut tp = [0.0; 3];
            tp[i] = h;
            let tm = tp.map(|x| -x);
            let fd = (f(tp) - f(tm)) / (2.0 * h);
            assert!((a.d1[i] - fd).norm() < 1e-7);
            for j in 0..3 {
                let g = |si: f64, sj: f64| {
                    let mut t = [0.0; 3];
                    t[i] += si * h;
                    t[j] += sj * h;
                    f(t)
                };
                let fd2 = (g(1.0, 1.0) - g(1.0, -1.0) - g(-1.0, 1.0) + g(-1.0, -1.0)) / (4.0 * h * h);
                assert!((a.d2(i, j) - fd2).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn dual_matches_first_order_of_jet() {
        let base = probe_base(&[0.3, -0.2, 0.7, 0.1, -0.5, 0.4]);
        let dirs = [
            [c(0.4, 0.0), c(-0.3, 0.2), c(0.9, 0.0)],
            [c(-0.6, 0.1), c(0.5, 0.0), c(0.2, -0.4)],
            [c(0.1, 0.0), c(0.0, 0.7), c(-0.8, 0.0)],
        ];
        let j = jet_probe(base, &dirs);
        let var = |i: usize| Dual { v: base[i], d: [dirs[0][i], dirs[1][i], dirs[2][i]] };
        let d = probe(var(0), var(1), var(2));
        assert!((d.v - j.v).norm() < 1e-14);
        for k in 0..3 {
            assert!((d.d[k] - j.d1[k]).norm() < 1e-13);
        }
    }

    proptest! {
        #[test]
        fn first_derivatives_match_central_differences(
            re in proptest::array::uniform6(-1.0f64..1.0),
            dr in proptest::array::uniform9(-1.0f64..1.0),
        ) {
            let base = probe_base(&re);
            let dirs = [
                [c(dr[0], 0.0), c(dr[1], 0.0), c(dr[2], 0.0)],
                [c(dr[3], 0.1), c(dr[4], 0.0), c(dr[5], 0.0)],
                [c(dr[6], 0.0), c(dr[7], -0.1), c(dr[8], 0.0)],
            ];
            let j = jet_probe(base, &dirs);
            let h = 1e-5;
            for k in 0..3 {
                let mut tp = [Z; 3];
                let mut tm = [Z; 3];
                tp[k] = c(h, 0.0);
                tm[k] = c(-h, 0.0);
                let fd = (eval_at(base, tp, &dirs) - eval_at(base, tm, &dirs)) / (2.0 * h);
                let scale = fd.norm().max(1.0);
                prop_assert!((fd - j.d1[k]).norm() / scale < 1e-6);
            }
        }

        #[test]
        fn second_derivatives_match_central_differences(
            re in proptest::array::uniform6(-1.0f64..1.0),
            dr in proptest::array::uniform9(-1.0f64..1.0),
        ) {
            let base = probe_base(&re);
            let dirs = [
                [c(dr[0], 0.0), c(dr[1], 0.0), c(dr[2], 0.0)],
                [c(dr[3], 0.0), c(dr[4], 0.2), c(dr[5], 0.0)],
                [c(dr[6], 0.0), c(dr[7], 0.0), c(dr[8], 0.0)],
            ];
            let j = jet_probe(base, &dirs);
            let h = 1e-4;
            for a in 0..3 {
                for b in 0..3 {
                    let f = |sa: f64, sb: f64| {
                        let mut t = [Z; 3];
                        t[a] += c(sa * h, 0.0);
                        t[b] += c(sb * h, 0.0);
                        eval_at(base, t, &dirs)
                    };
                    let fd = (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h);
                    let scale = fd.norm().max(1.0);
                    prop_assert!((fd - j.d2(a, b)).norm() / scale < 1e-5);
                }
            }
        }

        #[test]
        fn derivative_jet_carries_mixed_terms(
            re in proptest::array::uniform6(-1.0f64..1.0),
        ) {
            let base = probe_base(&re);
            let dirs = [
                [c(1.0, 0.0), Z, Z],
                [Z, c(1.0, 0.0), Z],
                [Z, Z, c(1.0, 0.0)],
            ];
            let j = jet_probe(base, &dirs);
            for k in 0..3 {
                let dk = j.derivative(k);
                prop_assert_eq!(dk.v, j.d1[k]);
                for i in 0..3 {
                    prop_assert_eq!(dk.d1[i], j.d2(k, i));
                }
            }
        }
    }
}
