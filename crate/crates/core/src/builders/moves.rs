//! Reduction of a separating genus-2 decomposition graph to the canonical
//! graph through merges and zips, recording every intermediate pair.
//!
//! Two steps are not literal moves. Once the face vertices are merged and
//! the `A`-edges zipped, each piece is a one-vertex triangulation with no
//! bigons left, so it is replaced by the two-loop dissection with the same
//! vertex relation. The final step replaces the merged graph by the
//! canonical graph of the glued monodromies.

use super::canonical::gamma0_from_exprs;
use super::gamma2::Gamma2;
use crate::error::{Error, Result};
use crate::graph::{AdmissiblePair, End, Half, JumpExpr};

#[derive(Clone, Debug)]
pub struct MoveStep {
    pub label: String,
    pub pair: AdmissiblePair,
    /// False when the step substitutes an equivalent graph.
    pub literal: bool,
}

fn vertex_with(pair: &AdmissiblePair, edge: &str, end: End) -> Result<usize> {
    let e = pair.edge_index(edge)?;
    Ok(pair.locate(Half { edge: e, end }).0)
}

/// Zips pairs among the edges accepted by `pick` until none are adjacent.
fn zip_all(mut pair: AdmissiblePair, pick: impl Fn(&str) -> bool) -> AdmissiblePair {
    loop {
        let names: Vec<String> = pair.graph.edges.iter().filter(|n| pick(n)).cloned().collect();
        let mut next = None;
        'search: for (i, a) in names.iter().enumerate() {
            for b in &names[i + 1..] {
                if let Ok(p) = pair.zip_edges(a, b) {
                    next = Some(p);
                    break 'search;
                }
            }
        }
        match next {
            Some(p) => pair = p,
            None => return pair,
        }
    }
}

/// Replaces the three loops `x y z x⁻¹ y⁻¹ z⁻¹` after the cilium of a
/// vertex by a handle with `M_α = XY`, `M_β = XZ⁻¹`.
fn torus_to_handle(pair: &AdmissiblePair, v: usize, tag: &str) -> Result<AdmissiblePair> {
    let hs = &pair.graph.vertices[v].halves;
    if hs.len() != 7 || (0..3).any(|k| hs[1 + k].partner() != hs[4 + k]) {
        return Err(Error::Build(format!("vertex `{}` is not a one-vertex torus", pair.graph.vertices[v].name)));
    }
    let (x, y, z) = (pair.outgoing_expr(hs[1]), pair.outgoing_expr(hs[2]), pair.outgoing_expr(hs[3]));
    let ma = JumpExpr::prod(vec![x.clone(), y]);
    let mb = JumpExpr::prod(vec![x, JumpExpr::inv(z)]);
    let mut g = pair.clone();
    let ne = g.graph.edges.len();
    g.graph.edges.push(format!("alpha_{tag}"));
    g.jumps.jumps.push(mb);
    g.graph.edges.push(format!("beta_{tag}"));
    g.jumps.jumps.push(ma);
    let stem = hs[0];
    g.graph.vertices[v].halves =
        vec![stem, Half::tail(ne + 1), Half::head(ne), Half::head(ne + 1), Half::tail(ne)];
    let removed: Vec<usize> = hs[1..4].iter().map(|h| h.edge).collect();
    let keep: Vec<usize> = (0..g.graph.edges.len()).filter(|e| !removed.contains(e)).collect();
    let remap = |e: usize| keep.iter().position(|&k| k == e).unwrap();
    for vert in &mut g.graph.vertices {
        for h in &mut vert.halves {
            h.edge = remap(h.edge);
        }
    }
    g.graph.edges = keep.iter().map(|&e| g.graph.edges[e].clone()).collect();
    g.jumps.jumps = keep.iter().map(|&e| g.jumps.jumps[e].clone()).collect();
    AdmissiblePair::new(g.graph, g.jumps)
}

/// Every pair from the decomposition graph down to the canonical graph.
pub fn reduce_separating_torus_pair(g2: &Gamma2) -> Result<Vec<MoveStep>> {
    if g2.contours.len() != 1 || g2.pieces.len() != 2 || g2.pieces.iter().any(|p| p.triangulation.genus() != 1) {
        return Err(Error::Build("reduction needs two one-holed tori glued along one contour".into()));
    }
    let c = &g2.contours[0];
    let mut steps = vec![MoveStep { label: "decomposition graph".into(), pair: g2.pair.clone(), literal: true }];
    let mut pair = g2.pair.clone();

    // In the face holding the stem, merging at the stem corner would leave
    // the stem inside a bigon, so that face merges two corners further on.
    for p in &g2.pieces {
        let t = &p.triangulation;
        let stem = t.stems[0];
        for f in 0..t.n_faces() {
            let corner = if f == t.face_of(stem) { (t.corner_of(stem) + 2) % 3 } else { 0 };
            pair = pair.merge_vertices(&format!("a_{}_{}_{}", p.tag, f + 1, corner + 1))?;
        }
    }
    steps.push(MoveStep { label: "merge face vertices".into(), pair: pair.clone(), literal: true });

    let gadget: Vec<String> = c.gadget_edges.to_vec();
    pair = zip_all(pair, |n| !gadget.iter().any(|g| g == n));
    steps.push(MoveStep { label: "zip corner edges".into(), pair: pair.clone(), literal: true });

    for (k, p) in g2.pieces.iter().enumerate() {
        let stem = &gadget[if k == 0 { 0 } else { 6 }];
        let v = vertex_with(&pair, stem, End::Tail)?;
        pair = torus_to_handle(&pair, v, &p.tag)?;
    }
    steps.push(MoveStep { label: "canonical piece dissections".into(), pair: pair.clone(), literal: false });

    let [pt, gt, lt, g, lh, gh, ph] = c.gadget_edges.clone();
    pair = pair.merge_vertices(&pt)?;
    pair = pair.merge_vertices(&ph)?;
    steps.push(MoveStep { label: "merge boundary vertices".into(), pair: pair.clone(), literal: true });

    pair = pair.merge_vertices(&lt)?;
    pair = pair.merge_vertices(&lh)?;
    steps.push(MoveStep { label: "merge plumbing vertex".into(), pair: pair.clone(), literal: true });

    let loops = [gt.clone(), g.clone(), gh.clone()];
    pair = zip_all(pair, |n| loops.iter().any(|l| n.contains(l.as_str())));
    if pair.graph.vertices.len() != 1 || pair.graph.edges.len() != 5 {
        return Err(Error::Build("plumbing loops did not zip to a single edge".into()));
    }
    steps.push(MoveStep { label: "zip plumbing loops".into(), pair: pair.clone(), literal: true });

    let orig = &g2.pair;
    let jump = |name: &str| -> Result<JumpExpr> { Ok(orig.jumps.jumps[orig.edge_index(name)?].clone()) };
    // Glued handles conjugated by J(gh)⁻¹ overall, which keeps entries small.
    let frames = [
        JumpExpr::prod(vec![JumpExpr::inv(JumpExpr::B), JumpExpr::inv(jump(&gt)?)]),
        JumpExpr::inv(jump(&gh)?),
    ];
    let mut handles = Vec::new();
    for (p, f) in g2.pieces.iter().zip(frames) {
        let conj = |m: JumpExpr| JumpExpr::prod(vec![f.clone(), m, JumpExpr::inv(f.clone())]);
        let ma = jump_of(&pair, &format!("beta_{}", p.tag))?;
        let mb = jump_of(&pair, &format!("alpha_{}", p.tag))?;
        handles.push((conj(ma), conj(mb)));
    }
    let gamma0 = gamma0_from_exprs(pair.jumps.coords.clone(), pair.jumps.defs.clone(), handles)?;
    steps.push(MoveStep { label: "canonical graph".into(), pair: gamma0, literal: false });
    Ok(steps)
}

fn jump_of(pair: &AdmissiblePair, name: &str) -> Result<JumpExpr> {
    Ok(pair.jumps.jumps[pair.edge_index(name)?].clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::gamma2::{build_gamma2, SurfaceSpec};
    use crate::coords::Domain;
    use crate::form::omega_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn every_step_keeps_the_form() {
        let spec = SurfaceSpec::separating(1, 1);
        let g2 = build_gamma2(&spec, &spec.standard_triangulations().unwrap()).unwrap();
        let steps = reduce_separating_torus_pair(&g2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
        let params = g2.coords.params_of(&p);
        let base = omega_matrix(&g2.pair, params, &g2.coords).unwrap();
        for s in &steps {
            let rep = s.pair.validate_admissible(params, 1e-8).unwrap();
            assert!(rep.admissible, "{}: {}", s.label, rep.max_residual);
            let om = omega_matrix(&s.pair, params, &g2.coords).unwrap();
            assert!(om.max_dev(&base) < 1e-9, "{}: {}", s.label, om.max_dev(&base));
        }
    }
}
