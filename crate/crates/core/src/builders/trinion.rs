//! Explicit trinion representations, the relabeling shift of twist
//! coordinates, and genus-2 trinion graphs.

use super::gamma2::{build_gamma2, Gamma2, SurfaceSpec};
use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::mat2::Mat2;

/// Monodromies, normalized local diagonalizers and shears of one trinion.
#[derive(Clone, Debug)]
pub struct TrinionRep<T> {
    pub monodromies: [Mat2<T>; 3],
    /// Local monodromies `(A S_{e_{j+2}} A S_{e_{j+1}}⁻¹)⁻¹`.
    pub local: [Mat2<T>; 3],
    pub frames: [Mat2<T>; 3],
    pub shears: [T; 3],
}

/// Representation of a trinion with boundary eigenvalues `(−λⱼ, −1/λⱼ)`.
pub fn build_trinion_rep<T: Scalar>(lambda: [T; 3]) -> Result<TrinionRep<T>> {
    for l in &lambda {
        let v = l.value();
        if v.norm() < 1e-12 || (v * v - 1.0).norm() < 1e-12 {
            return Err(Error::Degenerate);
        }
    }
    let [l1, l2, l3] = lambda;
    let one = T::one();
    let zero = T::zero();
    let m1 = Mat2::new(-l1, zero, (l1 * l2 + l3) / (l1 * l3), -(one / l1));
    let m2 = Mat2::new(
        l3 / l1,
        -(l2 * l3 + l1) / (l1 * l2),
        (l1 * l2 + l3) / l1,
        -(l1 * l2 * l2 + l2 * l3 + l1) / (l1 * l2),
    );
    let m3 = Mat2::new(-(one / l3), -(l2 * l3 + l1) / l2, zero, -l3);
    // Principal root for the first shear; the others follow from
    // z₂z₃ = λ₁, z₃z₁ = λ₂, z₁z₂ = λ₃ so the branches stay compatible.
    let z1 = (l3 * l2 / l1).sqrt();
    let shears = [z1, l3 / z1, l2 / z1];
    let local = std::array::from_fn(|j| {
        let (a, b, c) = (lambda[j], lambda[(j + 1) % 3], lambda[(j + 2) % 3]);
        Mat2::new(-a, zero, (a * b + c) / (c * a), -(one / a))
    });
    let frames = std::array::from_fn(|j| {
        let (a, b, c) = (lambda[j], lambda[(j + 1) % 3], lambda[(j + 2) % 3]);
        Mat2::new(one, zero, -(a * b + c) / ((a * a - one) * c), one)
    });
    Ok(TrinionRep { monodromies: [m1, m2, m3], local, frames, shears })
}

/// Twist coordinates after reversing the cyclic order of a trinion's
/// boundaries. Returns `(β̃, ℓ̃)` with `ℓ̃ = (ℓ₃, ℓ₂, ℓ₁)`.
pub fn toric_shift<T: Scalar>(beta: [T; 3], ell: [T; 3]) -> ([T; 3], [T; 3]) {
    let h = T::from_c64(num_complex::Complex64::new(0.5, 0.0));
    let [b1, b2, b3] = beta;
    let [l1, l2, l3] = ell;
    let t3 = b1 + h * (l3 - l1 - l2);
    let t2 = b2 + h * (l1 - l2 - l3);
    let t1 = b3 + h * (l2 - l1 - l3);
    ([t1, t2, t3], [l3, l2, l1])
}

/// Genus-2 trinion graphs: theta, theta with one reversed vertex, and the
/// dumbbell with two loop edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrinionGraph2 {
    Theta,
    ThetaPrime,
    Dumbbell,
}

impl TrinionGraph2 {
    pub fn outlets(self) -> [[usize; 3]; 2] {
        match self {
            TrinionGraph2::Theta => [[0, 1, 2], [0, 2, 1]],
            TrinionGraph2::ThetaPrime => [[0, 1, 2], [0, 1, 2]],
            TrinionGraph2::Dumbbell => [[0, 0, 1], [1, 2, 2]],
        }
    }

    pub fn spec(self) -> Result<SurfaceSpec> {
        SurfaceSpec::from_trinion_graph(&self.outlets(), &["e1", "e2", "e3"])
    }
}

/// Builds the pair of a full trinion decomposition given by its outlets.
pub fn build_trinion_decomposition(outlets: &[[usize; 3]], edge_names: &[&str]) -> Result<Gamma2> {
    let spec = SurfaceSpec::from_trinion_graph(outlets, edge_names)?;
    let tris = spec.standard_triangulations()?;
    build_gamma2(&spec, &tris)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::Domain;
    use crate::form::omega_matrix;
    use crate::jet::Jet;
    use crate::mat2::{a_matrix, shear_matrix};
    use num_complex::Complex64 as C64;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn rep235() -> TrinionRep<C64> {
        build_trinion_rep([c(2.0, 0.0), c(3.0, 0.0), c(5.0, 0.0)]).unwrap()
    }

    #[test]
    fn monodromies_multiply_to_identity() {
        let r = rep235();
        let [m1, m2, m3] = r.monodromies;
        assert!((m1 * m2 * m3).dist_identity() < 1e-13);
        let l2 = c(3.0, 0.0);
        assert!((m2.trace() - (-l2 - 1.0 / l2)).norm() < 1e-13);
    }

    #[test]
    fn local_monodromy_example() {
        let r = rep235();
        let want = Mat2::new(c(-2.0, 0.0), c(0.0, 0.0), c(1.1, 0.0), c(-0.5, 0.0));
        assert!(r.local[0].dist(&want) < 1e-13);
    }

    #[test]
    fn equal_eigenvalues_give_equal_shears() {
        let l = c(-2.0, 1.0);
        let r = build_trinion_rep([l; 3]).unwrap();
        for z in r.shears {
            assert!((z - l.sqrt()).norm() < 1e-13);
        }
    }

    #[test]
    fn degenerate_eigenvalue_rejected() {
        assert!(build_trinion_rep([c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)]).is_err());
    }

    #[test]
    fn shift_without_lengths_permutes() {
        let z = c(0.0, 0.0);
        let (b, l) = toric_shift([c(1.0, 0.0), c(2.0, 0.0), c(3.0, 0.0)], [z; 3]);
        assert_eq!(b, [c(3.0, 0.0), c(2.0, 0.0), c(1.0, 0.0)]);
        assert_eq!(l, [z; 3]);
    }

    #[test]
    fn multiplicative_shift_example() {
        let lam = [c(2.0, 0.0), c(3.0, 0.0), c(5.0, 0.0)];
        let b1 = c(1.0, 1.0);
        let (bt, _) = toric_shift([b1.ln(), c(0.0, 0.0), c(0.0, 0.0)], lam.map(|l| l.ln()));
        let want = b1 * (lam[2] / (lam[0] * lam[1])).sqrt();
        assert!((bt[2].exp() - want).norm() < 1e-13);
    }

    fn arb_lambda() -> impl Strategy<Value = [C64; 3]> {
        let one = (0.2f64..0.7, -3.0f64..3.0).prop_map(|(r, t)| C64::from_polar(r.exp(), t));
        [one.clone(), one.clone(), one]
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn local_monodromy_from_shears(lam in arb_lambda()) {
            let r = build_trinion_rep(lam).unwrap();
            let a = a_matrix::<C64>();
            for j in 0..3 {
                let s2 = shear_matrix(r.shears[(j + 2) % 3]).unwrap();
                let s1 = shear_matrix(r.shears[(j + 1) % 3]).unwrap();
                let m = (a * s2 * a * s1.inv()).inv();
                prop_assert!(m.dist(&r.local[j]) < 1e-10 * (1.0 + m.max_abs()));
                let diag = Mat2::diag(-lam[j], -(C64::new(1.0, 0.0) / lam[j]));
                let back = r.frames[j] * diag * r.frames[j].inv();
                prop_assert!(back.dist(&r.local[j]) < 1e-10 * (1.0 + back.max_abs()));
            }
        }

        #[test]
        fn trace_gradients_match_differences(lam in arb_lambda()) {
            let jets = std::array::from_fn(|k| {
                let mut u = [C64::new(0.0, 0.0); 3];
                u[k] = C64::new(1.0, 0.0);
                Jet::affine(lam[k], u)
            });
            let r = build_trinion_rep(jets).unwrap();
            let h = 1e-5;
            for j in 0..3 {
                let tr = r.monodromies[j].trace();
                for k in 0..3 {
                    let mut p = lam;
                    let mut m = lam;
                    p[k] += h;
                    m[k] -= h;
                    let fp = build_trinion_rep(p).unwrap().monodromies[j].trace();
                    let fm = build_trinion_rep(m).unwrap().monodromies[j].trace();
                    let fd = (fp - fm) / (2.0 * h);
                    let d = tr.d1[k];
                    prop_assert!((d - fd).norm() <= 1e-6 * d.norm().max(1.0));
                }
            }
        }

        #[test]
        fn shift_identity_on_jets(vals in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 6),
                                  dirs in proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 12)) {
            let mk = |k: usize| {
                let u = [C64::new(dirs[2 * k].0, dirs[2 * k].1), C64::new(dirs[2 * k + 1].0, dirs[2 * k + 1].1), C64::new(0.0, 0.0)];
                Jet::affine(C64::new(vals[k].0, vals[k].1), u)
            };
            let beta = [mk(0), mk(1), mk(2)];
            let ell = [mk(3), mk(4), mk(5)];
            let (bt, lt) = toric_shift(beta, ell);
            let w = |x: &Jet, y: &Jet| x.d1[0] * y.d1[1] - x.d1[1] * y.d1[0];
            let lhs: C64 = (0..3).map(|j| w(&bt[j], &lt[j])).sum();
            let rhs: C64 = (0..3).map(|a| w(&ell[a], &ell[(a + 1) % 3]) + w(&beta[a], &ell[a])).sum();
            prop_assert!((lhs - rhs).norm() < 1e-12);
        }
    }

    #[test]
    fn trinion_graphs_have_integer_forms() {
        for (k, g) in [TrinionGraph2::Theta, TrinionGraph2::ThetaPrime, TrinionGraph2::Dumbbell].iter().enumerate() {
            let g2 = build_gamma2(&g.spec().unwrap(), &g.spec().unwrap().standard_triangulations().unwrap()).unwrap();
            assert_eq!(g2.coords.free, ["l_e1", "l_e2", "l_e3", "beta_e1", "beta_e2", "beta_e3"]);
            let mut rng = ChaCha8Rng::seed_from_u64(20 + k as u64);
            let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
            let om = omega_matrix(&g2.pair, g2.coords.params_of(&p), &g2.coords).unwrap();
            assert!(om.max_dev(&g2.formula_target().unwrap()) < 1e-9);
        }
    }
}
