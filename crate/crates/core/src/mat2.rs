//! 2×2 matrices over a scalar ring and the structural SL(2) matrices.

use crate::error::{Error, Result};
use crate::jet::Scalar;
use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Sub};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Mat2<T> {
    pub a: T,
    pub b: T,
    pub c: T,
    pub d: T,
}

impl<T: Scalar> Mat2<T> {
    pub fn new(a: T, b: T, c: T, d: T) -> Self {
        Mat2 { a, b, c, d }
    }

    pub fn identity() -> Self {
        Mat2::new(T::one(), T::zero(), T::zero(), T::one())
    }

    pub fn diag(x: T, y: T) -> Self {
        Mat2::new(x, T::zero(), T::zero(), y)
    }

    pub fn lift(m: &Mat2<C64>) -> Self {
        Mat2::new(T::from_c64(m.a), T::from_c64(m.b), T::from_c64(m.c), T::from_c64(m.d))
    }

    pub fn map<U>(&self, f: impl Fn(&T) -> U) -> Mat2<U> {
        Mat2 { a: f(&self.a), b: f(&self.b), c: f(&self.c), d: f(&self.d) }
    }

    pub fn value(&self) -> Mat2<C64> {
        self.map(|x| x.value())
    }

    pub fn det(&self) -> T {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> T {
        self.a + self.d
    }

    pub fn scale(&self, s: T) -> Self {
        self.map(|x| *x * s)
    }

    pub fn neg(&self) -> Self {
        self.map(|x| -*x)
    }

    pub fn max_abs(&self) -> f64 {
        let v = self.value();
        [v.a, v.b, v.c, v.d].iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Max-entry distance to `o`, with the difference taken in `T`.
    pub fn dist(&self, o: &Mat2<T>) -> f64 {
        (*self - *o).max_abs()
    }

    pub fn dist_identity(&self) -> f64 {
        self.dist(&Mat2::identity())
    }

    /// Adjugate over determinant; never assumes `det = 1`.
    pub fn inv(&self) -> Self {
        let r = self.det().recip();
        Mat2::new(self.d * r, -self.b * r, -self.c * r, self.a * r)
    }
}

impl<T: Scalar> Mul for Mat2<T> {
    type Output = Mat2<T>;
    fn mul(self, o: Mat2<T>) -> Mat2<T> {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }
}

impl<T: Scalar> Add for Mat2<T> {
    type Output = Mat2<T>;
    fn add(self, o: Mat2<T>) -> Mat2<T> {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }
}

impl<T: Scalar> Sub for Mat2<T> {
    type Output = Mat2<T>;
    fn sub(self, o: Mat2<T>) -> Mat2<T> {
        Mat2::new(self.a - o.a, self.b - o.b, self.c - o.c, self.d - o.d)
    }
}

impl Mat2<C64> {
    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(C64::new(a, 0.0), C64::new(b, 0.0), C64::new(c, 0.0), C64::new(d, 0.0))
    }

}

/// Which sign the diagonal of a boundary monodromy carries.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EigenSign {
    /// Diagonal `(−λ, −1/λ)`.
    Negative,
    /// Diagonal `(λ, 1/λ)`.
    Positive,
}

/// Normalized diagonalization `M = C Λ C⁻¹` with `C` unit lower triangular.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiagPair<T> {
    pub c: Mat2<T>,
    pub lambda_diag: Mat2<T>,
    pub lambda: T,
}

fn nonzero<T: Scalar>(x: &T) -> bool {
    let v = x.value();
    v.norm() > 0.0 && v.re.is_finite() && v.im.is_finite()
}

/// `S(z) = [[0, z], [−1/z, 0]]`.
pub fn shear_matrix<T: Scalar>(z: T) -> Result<Mat2<T>> {
    if !nonzero(&z) {
        return Err(Error::ZeroShear);
    }
    Ok(Mat2::new(T::zero(), z, -z.recip(), T::zero()))
}

/// `A = [[0, −1], [1, −1]]`, of order three.
pub fn a_matrix<T: Scalar>() -> Mat2<T> {
    Mat2::new(T::zero(), -T::one(), T::one(), -T::one())
}

/// `𝔟 = [[0, 1], [−1, 0]]`.
pub fn b_matrix<T: Scalar>() -> Mat2<T> {
    Mat2::new(T::zero(), T::one(), -T::one(), T::zero())
}

/// `diag(b⁻¹, b)`.
pub fn toric_matrix<T: Scalar>(b: T) -> Result<Mat2<T>> {
    if !nonzero(&b) {
        return Err(Error::ZeroToric);
    }
    Ok(Mat2::diag(b.recip(), b))
}

/// Diagonal part of a lower-triangular matrix.
pub fn lower_diagonal<T: Scalar>(m: &Mat2<T>, tol: f64) -> Result<Mat2<T>> {
    check_lower(m, tol)?;
    Ok(Mat2::diag(m.a, m.d))
}

/// Unit lower-triangular eigenvector matrix of a lower-triangular matrix.
pub fn lower_eigvec<T: Scalar>(m: &Mat2<T>, tol: f64) -> Result<Mat2<T>> {
    check_lower(m, tol)?;
    let gap = m.a - m.d;
    if gap.value().norm() <= tol {
        return Err(Error::Degenerate);
    }
    Ok(Mat2::new(T::one(), T::zero(), m.c / gap, T::one()))
}

fn check_lower<T: Scalar>(m: &Mat2<T>, tol: f64) -> Result<()> {
    let v = m.value();
    let off = v.b.norm();
    if off > tol * (1.0 + v.max_abs()) {
        return Err(Error::NotLowerTriangular(off));
    }
    Ok(())
}

pub fn diag_lower<T: Scalar>(m: &Mat2<T>, sign: EigenSign, tol: f64) -> Result<DiagPair<T>> {
    let c = lower_eigvec(m, tol)?;
    let lambda_diag = Mat2::diag(m.a, m.d);
    let lambda = match sign {
        EigenSign::Negative => -m.a,
        EigenSign::Positive => m.a,
    };
    Ok(DiagPair { c, lambda_diag, lambda })
}

/// `C · diag(b⁻¹, b)`.
pub fn toric_conjugate<T: Scalar>(c: &Mat2<T>, b: T) -> Result<Mat2<T>> {
    Ok(*c * toric_matrix(b)?)
}

/// Product of a list of matrices, left to right.
pub fn product<T: Scalar>(ms: impl IntoIterator<Item = Mat2<T>>) -> Mat2<T> {
    ms.into_iter().fold(Mat2::identity(), |acc, m| acc * m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::jet::Jet;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn annulus(rng: &mut ChaCha8Rng) -> C64 {
        C64::from_polar(rng.gen_range(0.5..2.0), rng.gen_range(-3.1..3.1))
    }

    #[test]
    fn shear_at_one_is_b() {
        assert_eq!(shear_matrix(c(1.0, 0.0)).unwrap(), b_matrix());
    }

    #[test]
    fn shear_inverse_is_negative() {
        let s = shear_matrix(c(2.0, 1.0)).unwrap();
        assert!(s.inv().dist(&s.neg()) < 1e-15);
    }

    #[test]
    fn shear_zero_is_rejected() {
        assert_eq!(shear_matrix(c(0.0, 0.0)), Err(Error::ZeroShear));
        assert_eq!(toric_matrix(c(0.0, 0.0)), Err(Error::ZeroToric));
    }

    #[test]
    fn shear_det_is_one_on_annulus() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            let s = shear_matrix(annulus(&mut rng)).unwrap();
            assert!((s.det() - 1.0).norm() < 1e-13);
        }
    }

    #[test]
    fn a_has_order_three() {
        let a: Mat2<C64> = a_matrix();
        assert!((a * a * a).dist_identity() == 0.0);
        assert_eq!(a.det(), c(1.0, 0.0));
        assert!(a.inv().dist(&(a * a)) == 0.0);
    }

    #[test]
    fn b_inverts_diagonal() {
        let b: Mat2<C64> = b_matrix();
        let l = Mat2::diag(c(3.0, 0.0), c(1.0 / 3.0, 0.0));
        let li = Mat2::diag(c(1.0 / 3.0, 0.0), c(3.0, 0.0));
        assert!((b.inv() * l * b).dist(&li) < 1e-15);
        assert!((b * b).dist(&Mat2::identity().neg()) == 0.0);
        assert!(b.inv().dist(&b.neg()) == 0.0);
    }

    #[test]
    fn diag_lower_of_diagonal_is_trivial() {
        let m = Mat2::diag(c(-2.0, 0.0), c(-0.5, 0.0));
        let dp = diag_lower(&m, EigenSign::Negative, 1e-12).unwrap();
        assert_eq!(dp.c, Mat2::identity());
        assert_eq!(dp.lambda_diag, m);
        assert_eq!(dp.lambda, c(2.0, 0.0));
    }

    #[test]
    fn diag_lower_reconstructs() {
        let m = Mat2::from_real(-2.0, 0.0, 5.0, -0.5);
        let dp = diag_lower(&m, EigenSign::Negative, 1e-12).unwrap();
        // C⁻¹ M C diagonal forces c·(M11 − M22) = M21.
        assert!((dp.c.c - c(5.0 / -1.5, 0.0)).norm() < 1e-15);
        assert!((dp.c * dp.lambda_diag * dp.c.inv()).dist(&m) < 1e-12);
    }

    #[test]
    fn diag_lower_rejects_degenerate_and_upper() {
        let m = Mat2::from_real(-1.0, 0.0, 5.0, -1.0);
        assert_eq!(diag_lower(&m, EigenSign::Negative, 1e-12), Err(Error::Degenerate));
        let u = Mat2::from_real(-2.0, 1.0, 0.0, -0.5);
        assert!(matches!(diag_lower(&u, EigenSign::Negative, 1e-12), Err(Error::NotLowerTriangular(_))));
    }

    #[test]
    fn toric_conjugate_basics() {
        let cm = Mat2::from_real(1.0, 0.0, 0.7, 1.0);
        assert_eq!(toric_conjugate(&cm, c(1.0, 0.0)).unwrap(), cm);
        let b = c(0.3, 1.2);
        let cp = toric_conjugate(&cm, b).unwrap();
        let l = Mat2::diag(c(-2.0, 0.5), c(-2.0, 0.5).inv());
        assert!((cp * l * cp.inv()).dist(&(cm * l * cm.inv())) < 1e-13);
        assert!((cp.det() - cm.det()).norm() < 1e-15);
    }

    #[test]
    fn jet_matrices_agree_with_plain_values() {
        let z = Jet::exp_of(c(1.2, -0.3), [c(1.0, 0.0), c(0.0, 1.0), c(0.5, 0.5)]);
        let s = shear_matrix(z).unwrap();
        let p = s * a_matrix() * s.inv();
        let s0 = shear_matrix(c(1.2, -0.3)).unwrap();
        assert!(p.value().dist(&(s0 * a_matrix() * s0.inv())) < 1e-15);
        assert!((p.det().v - 1.0).norm() < 1e-14);
        assert!(p.det().d1.iter().all(|d| d.norm() < 1e-13));
    }

    fn entry() -> impl Strategy<Value = C64> {
        (-10.0f64..10.0, -10.0f64..10.0).prop_map(|(a, b)| c(a, b))
    }

    proptest! {
        #[test]
        fn adjugate_inverse_of_sl2(a in entry(), b in entry(), cc in entry()) {
            prop_assume!(a.norm() > 0.1);
            // Fix d so that det = 1.
            let d = (c(1.0, 0.0) + b * cc) / a;
            prop_assume!(d.norm() <= 10.0);
            let m = Mat2::new(a, b, cc, d);
            prop_assert!((m * m.inv()).dist_identity() < 1e-13);
        }

        #[test]
        fn products_of_sl2_stay_in_sl2(z1 in 0.5f64..2.0, t1 in -3.0f64..3.0, z2 in 0.5f64..2.0, t2 in -3.0f64..3.0) {
            let s1 = shear_matrix(C64::from_polar(z1, t1)).unwrap();
            let s2 = shear_matrix(C64::from_polar(z2, t2)).unwrap();
            let m = s1 * a_matrix() * s2 * b_matrix() * a_matrix();
            prop_assert!((m.det() - 1.0).norm() < 1e-12);
        }
    }
}
