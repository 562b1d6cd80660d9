//! Combinatorial triangulations of closed surfaces as dart structures.
//!
//! Every face is a counterclockwise triple of darts. A dart runs from its
//! origin to the origin of the next dart of its face, and the vertex
//! rotation is `σ(d) = opp(prev(d))`, so the corner of `face(d)` at the
//! origin of `d` lies between `d` and `σ(d)`.

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Triangulation {
    pub faces: Vec<[usize; 3]>,
    pub opp: Vec<usize>,
    pub origin: Vec<usize>,
    /// Edge of each dart.
    pub edge: Vec<usize>,
    /// Dart running along each edge's orientation.
    pub tail: Vec<usize>,
    /// Per vertex, the dart `h_n` whose face corner holds the stem.
    pub stems: Vec<usize>,
    pub n_vertices: usize,
}

impl Triangulation {
    /// Builds a triangulation from faces given as `(edge, forward)` sides.
    pub fn from_faces(faces: &[[(usize, bool); 3]]) -> Result<Triangulation> {
        let nd = faces.len() * 3;
        let n_edges = faces.iter().flatten().map(|(e, _)| e + 1).max().unwrap_or(0);
        let mut slot = vec![[usize::MAX; 2]; n_edges];
        let mut edge = vec![0; nd];
        for (f, face) in faces.iter().enumerate() {
            for (i, &(e, fwd)) in face.iter().enumerate() {
                let d = 3 * f + i;
                let k = usize::from(!fwd);
                if slot[e][k] != usize::MAX {
                    return Err(Error::Build(format!("edge {e} used twice in the same direction")));
                }
                slot[e][k] = d;
                edge[d] = e;
            }
        }
        let mut opp = vec![0; nd];
        for (e, s) in slot.iter().enumerate() {
            if s.contains(&usize::MAX) {
                return Err(Error::Build(format!("edge {e} is not glued on both sides")));
            }
            opp[s[0]] = s[1];
            opp[s[1]] = s[0];
        }
        let tail = slot.iter().map(|s| s[0]).collect();
        let dart_faces: Vec<[usize; 3]> = (0..faces.len()).map(|f| [3 * f, 3 * f + 1, 3 * f + 2]).collect();
        let mut t = Triangulation {
            faces: dart_faces,
            opp,
            origin: vec![0; nd],
            edge,
            tail,
            stems: vec![],
            n_vertices: 0,
        };
        t.compute_vertices();
        Ok(t)
    }

    fn compute_vertices(&mut self) {
        let nd = self.opp.len();
        let mut parent: Vec<usize> = (0..nd).collect();
        fn find(p: &mut [usize], x: usize) -> usize {
            let mut r = x;
            while p[r] != r {
                r = p[r];
            }
            let mut y = x;
            while p[y] != r {
                let n = p[y];
                p[y] = r;
                y = n;
            }
            r
        }
        for d in 0..nd {
            let (a, b) = (find(&mut parent, self.next(d)), find(&mut parent, self.opp[d]));
            parent[a] = b;
        }
        let mut id = vec![usize::MAX; nd];
        let mut n = 0;
        let mut stems = Vec::new();
        for d in 0..nd {
            let r = find(&mut parent, d);
            if id[r] == usize::MAX {
                id[r] = n;
                n += 1;
                stems.push(d);
            }
            self.origin[d] = id[r];
        }
        self.n_vertices = n;
        self.stems = stems;
    }

    pub fn n_edges(&self) -> usize {
        self.tail.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn face_of(&self, d: usize) -> usize {
        d / 3
    }

    /// Corner position of a dart inside its face.
    pub fn corner_of(&self, d: usize) -> usize {
        d % 3
    }

    pub fn next(&self, d: usize) -> usize {
        3 * (d / 3) + (d % 3 + 1) % 3
    }

    pub fn prev(&self, d: usize) -> usize {
        3 * (d / 3) + (d % 3 + 2) % 3
    }

    pub fn sigma(&self, d: usize) -> usize {
        self.opp[self.prev(d)]
    }

    pub fn is_tail(&self, d: usize) -> bool {
        self.tail[self.edge[d]] == d
    }

    pub fn genus(&self) -> usize {
        let chi = self.n_vertices as i64 - self.n_edges() as i64 + self.n_faces() as i64;
        ((2 - chi) / 2) as usize
    }

    /// Darts `h_1 … h_n` leaving vertex `v`, counterclockwise from the stem.
    pub fn sequence(&self, v: usize) -> Vec<usize> {
        let last = self.stems[v];
        let mut seq = Vec::new();
        let mut d = self.sigma(last);
        loop {
            seq.push(d);
            if d == last {
                break;
            }
            d = self.sigma(d);
        }
        seq
    }

    /// Number of endpoints of each edge at `v`.
    pub fn multiplicity(&self, v: usize) -> Vec<usize> {
        let mut mu = vec![0; self.n_edges()];
        for d in self.sequence(v) {
            mu[self.edge[d]] += 1;
        }
        mu
    }

    /// Renumbers vertices so that old vertex `order[k]` becomes `k`.
    pub fn reorder_vertices(&mut self, order: &[usize]) {
        let mut new_id = vec![0; order.len()];
        for (k, &old) in order.iter().enumerate() {
            new_id[old] = k;
        }
        for o in self.origin.iter_mut() {
            *o = new_id[*o];
        }
        self.stems = order.iter().map(|&old| self.stems[old]).collect();
    }

    /// Renumbers edges by first occurrence along the sequence at vertex 0.
    pub fn number_edges_from_vertex0(&mut self) {
        let mut new_id = vec![usize::MAX; self.n_edges()];
        let mut n = 0;
        for d in self.sequence(0) {
            let e = self.edge[d];
            if new_id[e] == usize::MAX {
                new_id[e] = n;
                n += 1;
            }
        }
        for id in new_id.iter_mut().filter(|x| **x == usize::MAX) {
            *id = n;
            n += 1;
        }
        let mut tail = vec![0; self.n_edges()];
        for (e, &t) in self.tail.iter().enumerate() {
            tail[new_id[e]] = t;
        }
        self.tail = tail;
        for e in self.edge.iter_mut() {
            *e = new_id[*e];
        }
    }

    /// Places the stem of vertex `v` in the corner of the face containing `dart`.
    pub fn set_stem(&mut self, v: usize, dart: usize) -> Result<()> {
        if self.origin[dart] != v {
            return Err(Error::Build(format!("dart {dart} does not leave vertex {v}")));
        }
        self.stems[v] = dart;
        Ok(())
    }

    /// Adds a vertex inside face `f`, joined to its three corners by edges
    /// oriented towards the new vertex. Existing vertex, edge and stem
    /// labels are kept.
    pub fn insert_vertex(&self, f: usize) -> Result<Triangulation> {
        let ne = self.n_edges();
        let nd = self.opp.len();
        let side = |d: usize| (self.edge[d], self.is_tail(d));
        let mut faces: Vec<[(usize, bool); 3]> =
            (0..self.n_faces()).map(|g| self.faces[g].map(side)).collect();
        // Sub-face i is (d_i, v_{i+1} → x, x → v_i), with edge ne + i joining v_i and x.
        let sub = |i: usize| [side(self.faces[f][i]), (ne + (i + 1) % 3, true), (ne + i, false)];
        faces[f] = sub(0);
        faces.push(sub(1));
        faces.push(sub(2));
        let mut t = Triangulation::from_faces(&faces)?;
        let new_pos = |d: usize| match self.faces[f].iter().position(|&x| x == d) {
            Some(1) => nd,
            Some(2) => nd + 3,
            _ => d,
        };
        let mut order = vec![usize::MAX; self.n_vertices + 1];
        for d in 0..nd {
            order[self.origin[d]] = t.origin[new_pos(d)];
        }
        let x = (0..t.n_vertices).find(|v| !order.contains(v)).unwrap();
        order[self.n_vertices] = x;
        t.reorder_vertices(&order);
        for v in 0..self.n_vertices {
            t.stems[v] = new_pos(self.stems[v]);
        }
        t.validate()?;
        Ok(t)
    }

    pub fn validate(&self) -> Result<()> {
        for d in 0..self.opp.len() {
            let o = self.opp[d];
            if o == d || self.opp[o] != d {
                return Err(Error::Build(format!("dart {d} has an invalid opposite")));
            }
            if self.origin[o] != self.origin[self.next(d)] {
                return Err(Error::Build(format!("dart {d} endpoints are inconsistent")));
            }
            if self.edge[o] != self.edge[d] {
                return Err(Error::Build(format!("dart {d} and its opposite disagree on the edge")));
            }
        }
        for (v, &s) in self.stems.iter().enumerate() {
            if self.origin[s] != v {
                return Err(Error::Build(format!("stem of vertex {v} is misplaced")));
            }
        }
        let total: usize = (0..self.n_vertices).map(|v| self.sequence(v).len()).sum();
        if total != self.opp.len() {
            return Err(Error::Build("vertex rotations do not cover every dart".into()));
        }
        Ok(())
    }

    /// One-vertex triangulation of the closed genus-`g` surface: the
    /// fan-triangulated `4g`-gon with sides `a₁ b₁ a₁⁻¹ b₁⁻¹ ⋯`.
    pub fn one_vertex(g: usize) -> Result<Triangulation> {
        if g == 0 {
            return Err(Error::Build("a one-vertex triangulation needs genus ≥ 1".into()));
        }
        let n = 4 * g;
        let side = |i: usize| -> (usize, bool) {
            let k = i / 4;
            match i % 4 {
                0 => (2 * k, true),
                1 => (2 * k + 1, true),
                2 => (2 * k, false),
                _ => (2 * k + 1, false),
            }
        };
        let diag = |j: usize| 2 * g + (j - 2);
        let mut faces = Vec::new();
        for j in 1..=(n - 2) {
            let first = if j == 1 { side(0) } else { (diag(j), true) };
            let last = if j + 1 == n - 1 { side(n - 1) } else { (diag(j + 1), false) };
            faces.push([first, side(j), last]);
        }
        let mut t = Triangulation::from_faces(&faces)?;
        t.number_edges_from_vertex0();
        t.validate()?;
        Ok(t)
    }

    /// Sphere with three vertices and two faces. The first face is the
    /// corner-holding region, the second is the counterclockwise triangle
    /// `(v1, v2, v3)` with `e3: v1→v2`, `e1: v2→v3`, `e2: v3→v1`.
    pub fn trinion() -> Result<Triangulation> {
        let (e1, e2, e3) = (0, 1, 2);
        let faces = [
            [(e2, false), (e1, false), (e3, false)],
            [(e3, true), (e1, true), (e2, true)],
        ];
        let mut t = Triangulation::from_faces(&faces)?;
        let v = |d: usize| t.origin[t.tail[d]];
        let order = [v(e3), v(e1), v(e2)];
        t.reorder_vertices(&order);
        t.validate()?;
        Ok(t)
    }

    /// Two-vertex torus from the `[0,2]×[0,1]` rectangle with `P = (0,0)`,
    /// `Q = (1,0)`. Edges, in order: `e1 = P→Q` bottom-left,
    /// `e2` vertical loop at `Q`, `e3 = Q→P` bottom-right, `e4` diagonal
    /// `P→Q`, `e5` vertical loop at `P`, `e6` diagonal `Q→P`.
    pub fn torus_two_vertex() -> Result<Triangulation> {
        let (a, d, b, e, c, f) = (0, 1, 2, 3, 4, 5);
        let faces = [
            [(a, true), (d, true), (e, false)],
            [(e, true), (a, false), (c, false)],
            [(b, true), (c, true), (f, false)],
            [(f, true), (b, false), (d, false)],
        ];
        let t = Triangulation::from_faces(&faces)?;
        t.validate()?;
        Ok(t)
    }

    /// Triangulation with one vertex per boundary of a genus-`g` piece
    /// with `k` boundaries: a base triangulation plus vertex insertions.
    pub fn standard(g: usize, k: usize) -> Result<Triangulation> {
        let (mut t, start) = match g {
            0 if k >= 3 => (Triangulation::trinion()?, 3),
            0 => return Err(Error::Build("genus-0 pieces need at least three boundaries".into())),
            _ if k >= 1 => (Triangulation::one_vertex(g)?, 1),
            _ => return Err(Error::Build("pieces need at least one boundary".into())),
        };
        for _ in start..k {
            t = t.insert_vertex(0)?;
        }
        t.validate()?;
        Ok(t)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_vertex_counts() {
        for g in 1..=3 {
            let t = Triangulation::one_vertex(g).unwrap();
            assert_eq!(t.n_vertices, 1);
            assert_eq!(t.n_edges(), 6 * g - 3);
            assert_eq!(t.n_faces(), 4 * g - 2);
            assert_eq!(t.genus(), g);
            assert_eq!(t.sequence(0).len(), 2 * (6 * g - 3));
        }
    }

    #[test]
    fn torus_rotation_repeats_edges() {
        let t = Triangulation::one_vertex(1).unwrap();
        let edges: Vec<usize> = t.sequence(0).iter().map(|&d| t.edge[d]).collect();
        assert_eq!(edges, vec![0, 1, 2, 0, 1, 2]);
    }

    #[test]
    fn trinion_edge_ordering() {
        let t = Triangulation::trinion().unwrap();
        let seq = |v: usize| -> Vec<usize> { t.sequence(v).iter().map(|&d| t.edge[d] + 1).collect() };
        assert_eq!(seq(0), vec![3, 2]);
        assert_eq!(seq(1), vec![1, 3]);
        assert_eq!(seq(2), vec![2, 1]);
        // One outgoing and one incoming half-edge per vertex.
        for v in 0..3 {
            let outs = t.sequence(v).iter().filter(|&&d| t.is_tail(d)).count();
            assert_eq!(outs, 1);
        }
    }

    #[test]
    fn two_vertex_torus_multiplicities() {
        let t = Triangulation::torus_two_vertex().unwrap();
        assert_eq!((t.n_vertices, t.n_edges(), t.genus()), (2, 6, 1));
        assert_eq!(t.multiplicity(0), vec![1, 0, 1, 1, 2, 1]);
        assert_eq!(t.multiplicity(1), vec![1, 2, 1, 1, 0, 1]);
        for v in 0..2 {
            let mu: usize = t.multiplicity(v).iter().sum();
            assert_eq!(mu, t.sequence(v).len());
        }
    }

    #[test]
    fn insertion_adds_vertex_and_three_edges() {
        for (g, k) in [(1, 2), (1, 3), (0, 4), (2, 2)] {
            let t = Triangulation::standard(g, k).unwrap();
            assert_eq!(t.n_vertices, k);
            assert_eq!(t.genus(), g);
            assert_eq!(t.n_edges() as i64, 6 * g as i64 - 6 + 3 * k as i64);
        }
    }
}
