//! Canonical dissection graphs and the gluing maps that assemble surface
//! monodromies from piece data.
//!
//! A canonical graph has one vertex with half-edges
//! `β₁> α₁< β₁< α₁> ⋯`, where `J(αⱼ) = M_{βⱼ}` and `J(βⱼ) = M_{αⱼ}`, so the
//! vertex relation is `∏ [M_{αⱼ}, M_{βⱼ}] = I` with
//! `[A, B] = A B⁻¹ A⁻¹ B`.

use crate::error::{Error, Result};
use crate::graph::{AdmissiblePair, Coordinate, Def, Half, JumpAssignment, JumpExpr, PathSpec, RibbonGraph, Vertex};
use crate::jet::Scalar;
use crate::mat2::{b_matrix, product, Mat2};
use num_complex::Complex64 as C64;

pub type Handle<T = C64> = (Mat2<T>, Mat2<T>);

pub fn commutator<T: Scalar>(a: &Mat2<T>, b: &Mat2<T>) -> Mat2<T> {
    *a * b.inv() * a.inv() * *b
}

pub fn handle_product<T: Scalar>(handles: &[Handle<T>]) -> Mat2<T> {
    product(handles.iter().map(|(a, b)| commutator(a, b)))
}

/// `‖∏ [M_α, M_β] − I‖∞`.
pub fn relation_residual<T: Scalar>(handles: &[Handle<T>]) -> f64 {
    handle_product(handles).dist_identity()
}

/// Canonical graph whose handle monodromies are the given expressions.
pub fn gamma0_from_exprs(
    coords: Vec<Coordinate>,
    defs: Vec<Def>,
    handles: Vec<(JumpExpr, JumpExpr)>,
) -> Result<AdmissiblePair> {
    if handles.is_empty() {
        return Err(Error::Build("a canonical graph needs at least one handle".into()));
    }
    let mut edges = Vec::new();
    let mut jumps = Vec::new();
    let mut halves = Vec::new();
    for (j, (ma, mb)) in handles.into_iter().enumerate() {
        let (ea, eb) = (2 * j, 2 * j + 1);
        edges.push(format!("alpha{}", j + 1));
        jumps.push(mb);
        edges.push(format!("beta{}", j + 1));
        jumps.push(ma);
        halves.extend([Half::tail(eb), Half::head(ea), Half::head(eb), Half::tail(ea)]);
    }
    AdmissiblePair::new(
        RibbonGraph { vertices: vec![Vertex { name: "v0".into(), halves }], edges },
        JumpAssignment { coords, defs, jumps },
    )
}

/// Canonical graph with constant jumps; the relation must hold to `tol`.
pub fn build_gamma0(handles: &[Handle], tol: f64) -> Result<AdmissiblePair> {
    let r = relation_residual(handles);
    if r > tol {
        return Err(Error::NotAdmissible(r));
    }
    let exprs = handles.iter().map(|(a, b)| (JumpExpr::Lit(*a), JumpExpr::Lit(*b))).collect();
    gamma0_from_exprs(vec![], vec![], exprs)
}

/// Loops `αⱼ`, `βⱼ` on a canonical graph: each crosses the dual edge once.
pub fn gamma0_loops(pair: &AdmissiblePair) -> Result<Vec<(PathSpec, PathSpec)>> {
    let g = pair.graph.edges.len() / 2;
    (0..g)
        .map(|j| {
            let a = pair.edge_index(&format!("alpha{}", j + 1))?;
            let b = pair.edge_index(&format!("beta{}", j + 1))?;
            Ok((PathSpec::crossings(&[(b, 1)]), PathSpec::crossings(&[(a, 1)])))
        })
        .collect()
}

/// Handles of a one-boundary piece with boundary monodromy `C Λ C⁻¹`,
/// `Λ = diag(−λ, −1/λ)`, normalized by `C Λ C⁻¹ · ∏ [M_α, M_β] = I`.
#[derive(Clone, Debug)]
pub struct PieceData<T = C64> {
    pub handles: Vec<Handle<T>>,
    pub frame: Mat2<T>,
    pub lambda: T,
}

/// Handles of a two-boundary piece: `C₁ΛC₁⁻¹ · C₂ΛC₂⁻¹ · ∏ [M_α, M_β] = I`.
#[derive(Clone, Debug)]
pub struct TwoBoundaryData<T = C64> {
    pub handles: Vec<Handle<T>>,
    pub frames: [Mat2<T>; 2],
    pub lambda: T,
}

pub fn eigen_diag<T: Scalar>(lambda: T) -> Mat2<T> {
    Mat2::diag(-lambda, -lambda.recip())
}

fn check_lambda<T: Scalar>(lambda: T, tol: f64) -> Result<()> {
    if (lambda * lambda - T::one()).value().norm() <= tol {
        return Err(Error::Degenerate);
    }
    Ok(())
}

fn piece_residual<T: Scalar>(boundary: &[Mat2<T>], handles: &[Handle<T>]) -> f64 {
    let mut m = product(boundary.iter().copied());
    m = m * handle_product(handles);
    m.dist_identity()
}

fn conjugate<T: Scalar>(g: &Mat2<T>, handles: &[Handle<T>]) -> Vec<Handle<T>> {
    let gi = g.inv();
    handles.iter().map(|(a, b)| (*g * *a * gi, *g * *b * gi)).collect()
}

/// Surface handles from two pieces glued along a separating contour:
/// the first piece is conjugated by `Ĉ 𝔟⁻¹ C̃⁻¹`.
pub fn glue_separating<T: Scalar>(tilde: &PieceData<T>, hat: &PieceData<T>, tol: f64) -> Result<Vec<Handle<T>>> {
    if (tilde.lambda - hat.lambda).value().norm() > tol {
        return Err(Error::Build(format!(
            "boundary eigenvalues differ: {} vs {}",
            tilde.lambda.value(),
            hat.lambda.value()
        )));
    }
    check_lambda(tilde.lambda, tol)?;
    for p in [tilde, hat] {
        let bd = p.frame * eigen_diag(p.lambda) * p.frame.inv();
        let r = piece_residual(&[bd], &p.handles);
        if r > tol {
            return Err(Error::NotAdmissible(r));
        }
    }
    let g = gluing_matrix(&tilde.frame, &hat.frame);
    let mut out = conjugate(&g, &tilde.handles);
    out.extend(hat.handles.iter().copied());
    Ok(out)
}

/// `Ĉ 𝔟⁻¹ C̃⁻¹`.
pub fn gluing_matrix<T: Scalar>(tilde_frame: &Mat2<T>, hat_frame: &Mat2<T>) -> Mat2<T> {
    *hat_frame * b_matrix::<T>().inv() * tilde_frame.inv()
}

/// Surface handles from a piece whose two boundaries are glued: the new
/// handle is `(C₁ΛC₁⁻¹, C₁ 𝔟 C₂⁻¹)`.
pub fn glue_nonseparating<T: Scalar>(data: &TwoBoundaryData<T>, tol: f64) -> Result<Vec<Handle<T>>> {
    check_lambda(data.lambda, tol)?;
    let [c1, c2] = data.frames;
    let lam = eigen_diag(data.lambda);
    let r = piece_residual(&[c1 * lam * c1.inv(), c2 * lam * c2.inv()], &data.handles);
    if r > tol {
        return Err(Error::NotAdmissible(r));
    }
    let mut out = data.handles.clone();
    out.push((c1 * lam * c1.inv(), c1 * b_matrix() * c2.inv()));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mat2::shear_matrix;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn sl2(a: C64, b: C64, c_: C64) -> Mat2<C64> {
        Mat2::new(a, b, c_, (1.0 + b * c_) / a)
    }

    #[test]
    fn canonical_graph_is_admissible() {
        let a = sl2(c(1.2, 0.3), c(0.4, -0.1), c(-0.7, 0.2));
        let b = a.inv();
        // [A, A⁻¹] = A·A·A⁻¹·A⁻¹ = I.
        let pair = build_gamma0(&[(a, b)], 1e-12).unwrap();
        assert!(pair.validate_admissible(&[], 1e-12).unwrap().admissible);
        let loops = gamma0_loops(&pair).unwrap();
        let ma = pair.path_monodromy(&loops[0].0, &[]).unwrap();
        let mb = pair.path_monodromy(&loops[0].1, &[]).unwrap();
        assert!(ma.dist(&a) < 1e-15 && mb.dist(&b) < 1e-15);
    }

    #[test]
    fn broken_relation_is_rejected() {
        let a = sl2(c(1.2, 0.3), c(0.4, -0.1), c(-0.7, 0.2));
        let b = shear_matrix(c(0.9, 0.4)).unwrap();
        assert!(matches!(build_gamma0(&[(a, b)], 1e-9), Err(Error::NotAdmissible(_))));
    }

    #[test]
    fn mismatched_eigenvalues_are_rejected() {
        let p = PieceData { handles: vec![], frame: Mat2::identity(), lambda: c(2.0, 0.0) };
        let q = PieceData { lambda: c(2.5, 0.0), ..p.clone() };
        assert!(glue_separating(&p, &q, 1e-9).is_err());
    }
}
