//! Pants-decomposition graphs: triangulated pieces joined by plumbing
//! gadgets, one per contour.
//!
//! A piece vertex lists `[stem, A(c₀), S(h₁), A(face h₁), …, S(hₙ)]`, where
//! `h₁ … hₙ` are its darts counterclockwise from the stem corner `c₀`. Every
//! face carries an internal vertex joined to its three corners by `A`-edges.
//! The gadget of a contour links the two boundary vertices `ṽ`, `v̂` through
//! the chain `q̃, q, q̂`. Its edges carry the boundary diagonalization and the
//! toric twist.

use super::triangulation::Triangulation;
use crate::coords::{ConstraintSet, CoordinateSystem, Relation};
use crate::error::{Error, Result};
use crate::form::{pull_back, TwoFormMatrix};
use crate::graph::{AdmissiblePair, Coordinate, Def, Half, JumpAssignment, JumpExpr, RibbonGraph, Role, Vertex};
use crate::mat2::{diag_lower, DiagPair, EigenSign};
use num_complex::Complex64 as C64;
use std::f64::consts::PI;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PieceSpec {
    pub name: String,
    pub genus: usize,
    pub boundaries: usize,
}

/// A boundary component of a piece.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Side {
    pub piece: usize,
    pub boundary: usize,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ContourSpec {
    pub name: String,
    pub tilde: Side,
    pub hat: Side,
}

/// A closed surface cut along contours into pieces.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SurfaceSpec {
    pub pieces: Vec<PieceSpec>,
    pub contours: Vec<ContourSpec>,
}

fn side(piece: usize, boundary: usize) -> Side {
    Side { piece, boundary }
}

fn piece(name: &str, genus: usize, boundaries: usize) -> PieceSpec {
    PieceSpec { name: name.into(), genus, boundaries }
}

fn contour(name: &str, tilde: Side, hat: Side) -> ContourSpec {
    ContourSpec { name: name.into(), tilde, hat }
}

impl SurfaceSpec {
    /// Two one-boundary pieces of genus `gt` and `gh` joined by one contour.
    pub fn separating(gt: usize, gh: usize) -> SurfaceSpec {
        SurfaceSpec {
            pieces: vec![piece("t", gt, 1), piece("h", gh, 1)],
            contours: vec![contour("c", side(0, 0), side(1, 0))],
        }
    }

    /// One two-boundary piece of genus `g − 1` with its boundaries joined.
    pub fn nonseparating(g: usize) -> SurfaceSpec {
        SurfaceSpec {
            pieces: vec![piece("p", g.saturating_sub(1), 2)],
            contours: vec![contour("c", side(0, 0), side(0, 1))],
        }
    }

    /// Genus 2 cut along a separating and a nonseparating contour.
    pub fn two_contour_genus2() -> SurfaceSpec {
        SurfaceSpec {
            pieces: vec![piece("t", 1, 1), piece("h", 0, 3)],
            contours: vec![contour("c1", side(0, 0), side(1, 0)), contour("c2", side(1, 1), side(1, 2))],
        }
    }

    /// Genus-3 decompositions with `m = 1 … 4` contours.
    pub fn multicontour_genus3(m: usize) -> Result<SurfaceSpec> {
        Ok(match m {
            1 => SurfaceSpec {
                pieces: vec![piece("t", 1, 1), piece("h", 2, 1)],
                contours: vec![contour("c1", side(0, 0), side(1, 0))],
            },
            2 => SurfaceSpec {
                pieces: vec![piece("t", 1, 1), piece("h", 1, 3)],
                contours: vec![contour("c1", side(0, 0), side(1, 0)), contour("c2", side(1, 1), side(1, 2))],
            },
            3 => SurfaceSpec {
                pieces: vec![piece("a", 1, 1), piece("b", 1, 1), piece("s", 0, 4)],
                contours: vec![
                    contour("c1", side(0, 0), side(2, 0)),
                    contour("c2", side(1, 0), side(2, 1)),
                    contour("c3", side(2, 2), side(2, 3)),
                ],
            },
            4 => SurfaceSpec {
                pieces: vec![piece("a", 1, 1), piece("b", 1, 1), piece("x", 0, 3), piece("y", 0, 3)],
                contours: vec![
                    contour("c1", side(0, 0), side(2, 0)),
                    contour("c2", side(1, 0), side(3, 0)),
                    contour("c3", side(2, 1), side(3, 1)),
                    contour("c4", side(2, 2), side(3, 2)),
                ],
            },
            _ => return Err(Error::Build(format!("no genus-3 decomposition with {m} contours"))),
        })
    }

    /// Trinion decomposition from a trivalent graph: vertex `j` lists the
    /// edges at its outlets in counterclockwise order.
    pub fn from_trinion_graph(outlets: &[[usize; 3]], edge_names: &[&str]) -> Result<SurfaceSpec> {
        let mut seen: Vec<Vec<Side>> = vec![Vec::new(); edge_names.len()];
        for (j, out) in outlets.iter().enumerate() {
            for (a, &e) in out.iter().enumerate() {
                seen.get_mut(e)
                    .ok_or_else(|| Error::Build(format!("outlet references missing edge {e}")))?
                    .push(side(j, a));
            }
        }
        let mut contours = Vec::new();
        for (e, s) in seen.iter().enumerate() {
            if s.len() != 2 {
                return Err(Error::Build(format!("edge `{}` meets {} outlets", edge_names[e], s.len())));
            }
            contours.push(contour(edge_names[e], s[0], s[1]));
        }
        let pieces = (0..outlets.len()).map(|j| piece(&format!("T{}", j + 1), 0, 3)).collect();
        let spec = SurfaceSpec { pieces, contours };
        spec.genus()?;
        Ok(spec)
    }

    /// Genus of the glued surface, after consistency checks.
    pub fn genus(&self) -> Result<usize> {
        let mut used: Vec<Vec<bool>> = self.pieces.iter().map(|p| vec![false; p.boundaries]).collect();
        for c in &self.contours {
            for s in [c.tilde, c.hat] {
                let slot = used
                    .get_mut(s.piece)
                    .and_then(|u| u.get_mut(s.boundary))
                    .ok_or_else(|| Error::Build(format!("contour `{}` references a missing boundary", c.name)))?;
                if *slot {
                    return Err(Error::Build(format!("boundary {}/{} glued twice", s.piece, s.boundary)));
                }
                *slot = true;
            }
        }
        if used.iter().flatten().any(|u| !u) {
            return Err(Error::Build("every boundary must be glued".into()));
        }
        for p in &self.pieces {
            if p.boundaries == 0 || (p.genus == 0 && p.boundaries < 3) {
                return Err(Error::Build(format!("piece `{}` is not stable", p.name)));
            }
        }
        let mut parent: Vec<usize> = (0..self.pieces.len()).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            if p[x] != x {
                let r = find(p, p[x]);
                p[x] = r;
            }
            p[x]
        }
        for c in &self.contours {
            let (a, b) = (find(&mut parent, c.tilde.piece), find(&mut parent, c.hat.piece));
            parent[a] = b;
        }
        let roots = (0..self.pieces.len()).filter(|&i| find(&mut parent, i) == i).count();
        if roots != 1 {
            return Err(Error::Build("the glued surface is disconnected".into()));
        }
        let gsum: usize = self.pieces.iter().map(|p| p.genus).sum();
        Ok(gsum + self.contours.len() + 1 - self.pieces.len())
    }

    /// Standard triangulations of every piece.
    pub fn standard_triangulations(&self) -> Result<Vec<Triangulation>> {
        self.pieces.iter().map(|p| Triangulation::standard(p.genus, p.boundaries)).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PieceLayout {
    pub tag: String,
    pub triangulation: Triangulation,
    /// Graph vertex of each boundary.
    pub vertices: Vec<String>,
    pub edges: Vec<String>,
    pub shears: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContourLayout {
    pub name: String,
    pub tilde_vertex: String,
    pub hat_vertex: String,
    pub length: String,
    pub twist: String,
    /// Gadget edges `pt, gt, lt, g, lh, gh, ph`.
    pub gadget_edges: [String; 7],
    /// Gadget vertices `q̃, q, q̂`.
    pub gadget_vertices: [String; 3],
}

/// A pants-decomposition pair with its Fenchel–Nielsen type coordinates.
#[derive(Clone, Debug)]
pub struct Gamma2 {
    pub spec: SurfaceSpec,
    pub pair: AdmissiblePair,
    pub coords: CoordinateSystem,
    pub pieces: Vec<PieceLayout>,
    pub contours: Vec<ContourLayout>,
}

struct Assembler {
    coords: Vec<Coordinate>,
    derived: Vec<Coordinate>,
    defs: Vec<Def>,
    edges: Vec<String>,
    jumps: Vec<JumpExpr>,
    vertices: Vec<Vertex>,
}

impl Assembler {
    fn edge(&mut self, name: String, jump: JumpExpr) -> usize {
        self.edges.push(name);
        self.jumps.push(jump);
        self.edges.len() - 1
    }

    fn param(&mut self, name: String, role: Role) -> usize {
        self.coords.push(Coordinate { name, role });
        self.coords.len() - 1
    }

    fn outgoing(&self, h: Half) -> JumpExpr {
        match h.end {
            crate::graph::End::Tail => self.jumps[h.edge].clone(),
            crate::graph::End::Head => JumpExpr::inv(self.jumps[h.edge].clone()),
        }
    }
}

/// Builds the pair for a decomposition with one triangulation per piece;
/// boundary `b` of a piece sits at triangulation vertex `b`.
pub fn build_gamma2(spec: &SurfaceSpec, tris: &[Triangulation]) -> Result<Gamma2> {
    spec.genus()?;
    if tris.len() != spec.pieces.len() {
        return Err(Error::Build("one triangulation per piece is required".into()));
    }
    for (p, t) in spec.pieces.iter().zip(tris) {
        t.validate()?;
        if t.n_vertices != p.boundaries || t.genus() != p.genus {
            return Err(Error::Build(format!("triangulation does not fit piece `{}`", p.name)));
        }
    }
    let mut asm = Assembler {
        coords: vec![],
        derived: vec![],
        defs: vec![],
        edges: vec![],
        jumps: vec![],
        vertices: vec![],
    };
    let mut pieces = Vec::new();
    let mut stem_slots: Vec<Vec<usize>> = Vec::new();
    for (p, t) in spec.pieces.iter().zip(tris) {
        let tag = &p.name;
        let mut edges = Vec::new();
        let mut shears = Vec::new();
        let mut s_edges = Vec::new();
        for k in 0..t.n_edges() {
            let z = format!("z_{tag}_{}", k + 1);
            let zi = asm.param(z.clone(), Role::Shear);
            let name = format!("e_{tag}_{}", k + 1);
            s_edges.push(asm.edge(name.clone(), JumpExpr::Shear(zi)));
            edges.push(name);
            shears.push(z);
        }
        let mut a_edges = Vec::new();
        for f in 0..t.n_faces() {
            let corner: Vec<usize> =
                (0..3).map(|c| asm.edge(format!("a_{tag}_{}_{}", f + 1, c + 1), JumpExpr::A)).collect();
            a_edges.push(corner);
        }
        let mut vnames = Vec::new();
        let mut slots = Vec::new();
        for v in 0..t.n_vertices {
            let seq = t.sequence(v);
            let last = *seq.last().unwrap();
            let a_of = |d: usize| Half::tail(a_edges[t.face_of(d)][t.corner_of(d)]);
            let s_of = |d: usize| {
                let e = s_edges[t.edge[d]];
                if t.is_tail(d) {
                    Half::tail(e)
                } else {
                    Half::head(e)
                }
            };
            // The stem half is filled in once the gadget edges exist.
            let mut halves = vec![Half::tail(usize::MAX), a_of(last)];
            for (i, &d) in seq.iter().enumerate() {
                halves.push(s_of(d));
                if i + 1 < seq.len() {
                    halves.push(a_of(d));
                }
            }
            let name = format!("v_{tag}_{}", v + 1);
            asm.vertices.push(Vertex { name: name.clone(), halves });
            slots.push(asm.vertices.len() - 1);
            vnames.push(name);
        }
        for (f, corner) in a_edges.iter().enumerate() {
            asm.vertices.push(Vertex {
                name: format!("w_{tag}_{}", f + 1),
                halves: corner.iter().map(|&e| Half::head(e)).collect(),
            });
        }
        stem_slots.push(slots);
        pieces.push(PieceLayout { tag: tag.clone(), triangulation: t.clone(), vertices: vnames, edges, shears });
    }

    let mut relations = Vec::new();
    let mut contours = Vec::new();
    let mut toric_names = Vec::new();
    for c in &spec.contours {
        let n = &c.name;
        let length = format!("l_{n}");
        let twist = format!("beta_{n}");
        asm.derived.push(Coordinate { name: length.clone(), role: Role::Length });
        asm.derived.push(Coordinate { name: twist.clone(), role: Role::Twist });
        let bt = asm.param(format!("b_{n}_t"), Role::Toric);
        let bh = asm.param(format!("b_{n}_h"), Role::Toric);
        toric_names.push(asm.coords[bt].name.clone());
        toric_names.push(asm.coords[bh].name.clone());
        let mut defs = [0usize; 2];
        for (k, s) in [c.tilde, c.hat].iter().enumerate() {
            let vi = stem_slots[s.piece][s.boundary];
            let after: Vec<JumpExpr> = asm.vertices[vi].halves[1..].iter().map(|&h| asm.outgoing(h)).collect();
            let def_name = format!("M{}_{n}", ["t", "h"][k]);
            asm.defs.push(Def { name: def_name, expr: JumpExpr::inv(JumpExpr::prod(after)) });
            defs[k] = asm.defs.len() - 1;
            relations.push(boundary_relation(&spec.pieces[s.piece].name, &tris[s.piece], s.boundary, &length));
        }
        relations.push(Relation::new(
            vec![(asm.coords[bt].name.clone(), 2.0), (asm.coords[bh].name.clone(), 2.0), (twist.clone(), -1.0)],
            C64::new(0.0, 0.0),
            vec![asm.coords[bt].name.clone()],
        ));
        relations.push(Relation::new(
            vec![(asm.coords[bt].name.clone(), 1.0), (asm.coords[bh].name.clone(), -1.0)],
            C64::new(0.0, 0.0),
            vec![asm.coords[bh].name.clone()],
        ));
        let (mt, mh) = (JumpExpr::Def(defs[0]), JumpExpr::Def(defs[1]));
        let eigvec = |m: &JumpExpr, b: usize| {
            JumpExpr::prod(vec![JumpExpr::Eigvec(Box::new(m.clone())), JumpExpr::inv(JumpExpr::Toric(b))])
        };
        let en = |s: &str| format!("{s}_{n}");
        let pt = asm.edge(en("pt"), mt.clone());
        let gt = asm.edge(en("gt"), eigvec(&mt, bt));
        let lt = asm.edge(en("lt"), JumpExpr::Eigval(Box::new(mt.clone())));
        let g = asm.edge(en("g"), JumpExpr::B);
        let lh = asm.edge(en("lh"), JumpExpr::Eigval(Box::new(mh.clone())));
        let gh = asm.edge(en("gh"), eigvec(&mh, bh));
        let ph = asm.edge(en("ph"), mh.clone());
        let (vt, vh) = (stem_slots[c.tilde.piece][c.tilde.boundary], stem_slots[c.hat.piece][c.hat.boundary]);
        asm.vertices[vt].halves[0] = Half::tail(pt);
        asm.vertices[vh].halves[0] = Half::tail(ph);
        let (t, h) = (Half::tail, Half::head);
        let qn = [en("qt"), en("q"), en("qh")];
        asm.vertices.push(Vertex { name: qn[0].clone(), halves: vec![h(pt), t(gt), t(lt), h(gt)] });
        asm.vertices.push(Vertex { name: qn[1].clone(), halves: vec![h(g), h(lt), t(g), h(lh)] });
        asm.vertices.push(Vertex { name: qn[2].clone(), halves: vec![h(ph), t(gh), t(lh), h(gh)] });
        contours.push(ContourLayout {
            name: n.clone(),
            tilde_vertex: asm.vertices[vt].name.clone(),
            hat_vertex: asm.vertices[vh].name.clone(),
            length,
            twist,
            gadget_edges: ["pt", "gt", "lt", "g", "lh", "gh", "ph"].map(en),
            gadget_vertices: qn,
        });
    }
    if asm.vertices.iter().any(|v| v.halves[0].edge == usize::MAX) {
        return Err(Error::Build("a piece boundary is not attached to a contour".into()));
    }

    let mut order: Vec<String> = pieces.iter().flat_map(|p| p.shears.clone()).collect();
    order.extend(contours.iter().map(|c| c.length.clone()));
    order.extend(contours.iter().map(|c| c.twist.clone()));
    order.extend(toric_names);
    let coords = CoordinateSystem::new(
        asm.coords.clone(),
        asm.derived.clone(),
        ConstraintSet { relations },
        &order,
    )?;
    let pair = AdmissiblePair::new(
        RibbonGraph { vertices: asm.vertices, edges: asm.edges },
        JumpAssignment { coords: asm.coords, defs: asm.defs, jumps: asm.jumps },
    )?;
    Ok(Gamma2 { spec: spec.clone(), pair, coords, pieces, contours })
}

/// `Σ μ_e ζ_e − ℓ = iπ·((#incoming + 1) mod 2)` at a boundary vertex,
/// pivoting on the shears in half-edge order, then on the piece's others.
fn boundary_relation(tag: &str, t: &Triangulation, v: usize, length: &str) -> Relation {
    let seq = t.sequence(v);
    let mut terms: Vec<(String, f64)> = Vec::new();
    let mut pivots = Vec::new();
    for (e, &mu) in t.multiplicity(v).iter().enumerate() {
        if mu > 0 {
            terms.push((format!("z_{tag}_{}", e + 1), mu as f64));
        }
    }
    for &d in &seq {
        let z = format!("z_{tag}_{}", t.edge[d] + 1);
        if !pivots.contains(&z) {
            pivots.push(z);
        }
    }
    for e in 0..t.n_edges() {
        let z = format!("z_{tag}_{}", e + 1);
        if !pivots.contains(&z) {
            pivots.push(z);
        }
    }
    terms.push((length.to_string(), -1.0));
    let incoming = seq.iter().filter(|&&d| !t.is_tail(d)).count();
    let offset = C64::new(0.0, PI * ((incoming + 1) % 2) as f64);
    Relation::new(terms, offset, pivots)
}

impl Gamma2 {
    pub fn genus(&self) -> usize {
        self.spec.genus().unwrap_or(0)
    }

    /// Closed-form target: per boundary vertex `Σ_{i<j} dζ_{hᵢ}∧dζ_{hⱼ}`
    /// plus `Σ dβ∧dℓ`, pulled back to the free coordinates.
    pub fn formula_target(&self) -> Result<TwoFormMatrix> {
        let names: Vec<String> = self.coords.all_coords().map(|c| c.name.clone()).collect();
        let mut full = TwoFormMatrix::zeros(names);
        for p in &self.pieces {
            let t = &p.triangulation;
            for v in 0..t.n_vertices {
                let seq = t.sequence(v);
                for i in 0..seq.len() {
                    for j in (i + 1)..seq.len() {
                        full.add_wedge(&p.shears[t.edge[seq[i]]], &p.shears[t.edge[seq[j]]], 1.0)?;
                    }
                }
            }
        }
        for c in &self.contours {
            full.add_wedge(&c.twist, &c.length, 1.0)?;
        }
        pull_back(&full, &self.coords)
    }

    pub fn piece(&self, tag: &str) -> Result<&PieceLayout> {
        self.pieces.iter().find(|p| p.tag == tag).ok_or_else(|| Error::Build(format!("no piece `{tag}`")))
    }

    pub fn contour(&self, name: &str) -> Result<&ContourLayout> {
        self.contours.iter().find(|c| c.name == name).ok_or_else(|| Error::Build(format!("no contour `{name}`")))
    }
}

/// Monodromy around the boundary at a vertex: the inverse product of the
/// outgoing jumps after the cilium, in lower-triangular form.
pub fn boundary_monodromy(pair: &AdmissiblePair, vertex: &str, params: &[C64], tol: f64) -> Result<DiagPair<C64>> {
    let v = pair.vertex_index(vertex)?;
    let ev = pair.evaluate(params)?;
    let js = pair.vertex_jumps(&ev, v);
    let m = crate::mat2::product(js[1..].iter().copied()).inv();
    diag_lower(&m, EigenSign::Negative, tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coords::Domain;
    use crate::form::omega_matrix;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn check_formula(spec: &SurfaceSpec, seed: u64) -> f64 {
        let tris = spec.standard_triangulations().unwrap();
        let g2 = build_gamma2(spec, &tris).unwrap();
        assert_eq!(g2.coords.dim(), 6 * g2.genus() - 6);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
        let params = g2.coords.params_of(&p);
        let rep = g2.pair.validate_admissible(params, 1e-8).unwrap();
        assert!(rep.admissible, "{rep:?}");
        let om = omega_matrix(&g2.pair, params, &g2.coords).unwrap();
        om.max_dev(&g2.formula_target().unwrap())
    }

    #[test]
    fn separating_genus2_matches_formula() {
        assert!(check_formula(&SurfaceSpec::separating(1, 1), 1) < 1e-9);
    }

    #[test]
    fn nonseparating_genus2_matches_formula() {
        assert!(check_formula(&SurfaceSpec::nonseparating(2), 2) < 1e-9);
    }

    #[test]
    fn two_vertex_torus_nonseparating_matches_formula() {
        let spec = SurfaceSpec::nonseparating(2);
        let g2 = build_gamma2(&spec, &[Triangulation::torus_two_vertex().unwrap()]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
        let om = omega_matrix(&g2.pair, g2.coords.params_of(&p), &g2.coords).unwrap();
        assert!(om.max_dev(&g2.formula_target().unwrap()) < 1e-9);
    }

    #[test]
    fn multicontour_genus3_matches_formula() {
        for m in 1..=4 {
            assert!(check_formula(&SurfaceSpec::multicontour_genus3(m).unwrap(), 10 + m as u64) < 1e-9);
        }
    }

    #[test]
    fn two_contour_matches_formula() {
        assert!(check_formula(&SurfaceSpec::two_contour_genus2(), 3) < 1e-9);
    }

    #[test]
    fn boundary_eigenvalue_is_length() {
        let spec = SurfaceSpec::separating(1, 1);
        let g2 = build_gamma2(&spec, &spec.standard_triangulations().unwrap()).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
        let params = g2.coords.params_of(&p);
        let c = &g2.contours[0];
        let li = g2.coords.all_coords().position(|x| x.name == c.length).unwrap();
        for v in [&c.tilde_vertex, &c.hat_vertex] {
            let dp = boundary_monodromy(&g2.pair, v, params, 1e-8).unwrap();
            assert!((dp.lambda - p.values[li]).norm() < 1e-9);
        }
    }

    #[test]
    fn spec_validation() {
        assert_eq!(SurfaceSpec::separating(1, 2).genus().unwrap(), 3);
        assert_eq!(SurfaceSpec::nonseparating(3).genus().unwrap(), 3);
        for m in 1..=4 {
            assert_eq!(SurfaceSpec::multicontour_genus3(m).unwrap().genus().unwrap(), 3);
        }
        let mut bad = SurfaceSpec::separating(1, 1);
        bad.contours[0].hat = side(0, 0);
        assert!(bad.genus().is_err());
        assert!(SurfaceSpec::from_trinion_graph(&[[0, 1, 2], [0, 1, 1]], &["e1", "e2", "e3"]).is_err());
    }
}
