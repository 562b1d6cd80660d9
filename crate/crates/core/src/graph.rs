//! Ribbon graphs with parametrized jump matrices.
//!
//! Vertices list their half-edges counterclockwise starting at the cilium.
//! An edge runs from its tail half-edge to its head half-edge; the
//! outgoing jump is `J(e)` at the tail and `J(e)⁻¹` at the head.

use crate::error::{Error, Result};
use crate::jet::Scalar;
use crate::mat2::{
    a_matrix, b_matrix, lower_diagonal, lower_eigvec, shear_matrix, toric_matrix, Mat2,
};
use num_complex::Complex64 as C64;
use std::collections::HashMap;

/// Tolerance for the lower-triangular checks inside jump evaluation.
pub const EVAL_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Role {
    Shear,
    Length,
    Twist,
    Toric,
}

impl Role {
    pub fn keyword(self) -> &'static str {
        match self {
            Role::Shear => "shear",
            Role::Length => "length",
            Role::Twist => "twist",
            Role::Toric => "toric",
        }
    }

    pub fn from_keyword(s: &str) -> Option<Role> {
        match s {
            "shear" => Some(Role::Shear),
            "length" => Some(Role::Length),
            "twist" => Some(Role::Twist),
            "toric" => Some(Role::Toric),
            _ => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Coordinate {
    pub name: String,
    pub role: Role,
}

/// Jump matrix as an expression in the graph parameters.
#[derive(Clone, Debug, PartialEq)]
pub enum JumpExpr {
    Identity,
    A,
    B,
    /// `S(z)` of a parameter.
    Shear(usize),
    /// `diag(b⁻¹, b)` of a parameter.
    Toric(usize),
    Def(usize),
    Lit(Mat2<C64>),
    Inv(Box<JumpExpr>),
    Prod(Vec<JumpExpr>),
    /// Diagonal part of a lower-triangular matrix.
    Eigval(Box<JumpExpr>),
    /// Unit lower-triangular eigenvector matrix of a lower-triangular matrix.
    Eigvec(Box<JumpExpr>),
}

impl JumpExpr {
    pub fn prod(mut items: Vec<JumpExpr>) -> JumpExpr {
        items.retain(|e| *e != JumpExpr::Identity);
        match items.len() {
            0 => JumpExpr::Identity,
            1 => items.pop().unwrap(),
            _ => JumpExpr::Prod(items),
        }
    }

    pub fn inv(e: JumpExpr) -> JumpExpr {
        match e {
            JumpExpr::Identity => JumpExpr::Identity,
            JumpExpr::Inv(inner) => *inner,
            other => JumpExpr::Inv(Box::new(other)),
        }
    }

    pub fn eval<T: Scalar>(&self, params: &[T], defs: &[Mat2<T>]) -> Result<Mat2<T>> {
        Ok(match self {
            JumpExpr::Identity => Mat2::identity(),
            JumpExpr::A => a_matrix(),
            JumpExpr::B => b_matrix(),
            JumpExpr::Shear(k) => shear_matrix(params[*k])?,
            JumpExpr::Toric(k) => toric_matrix(params[*k])?,
            JumpExpr::Def(k) => defs[*k],
            JumpExpr::Lit(m) => Mat2::lift(m),
            JumpExpr::Inv(e) => e.eval(params, defs)?.inv(),
            JumpExpr::Prod(es) => {
                let mut acc = Mat2::identity();
                for e in es {
                    acc = acc * e.eval(params, defs)?;
                }
                acc
            }
            JumpExpr::Eigval(e) => lower_diagonal(&e.eval(params, defs)?, EVAL_TOL)?,
            JumpExpr::Eigvec(e) => lower_eigvec(&e.eval(params, defs)?, EVAL_TOL)?,
        })
    }

    fn visit(&self, f: &mut impl FnMut(&JumpExpr)) {
        f(self);
        match self {
            JumpExpr::Inv(e) | JumpExpr::Eigval(e) | JumpExpr::Eigvec(e) => e.visit(f),
            JumpExpr::Prod(es) => es.iter().for_each(|e| e.visit(f)),
            _ => {}
        }
    }

    /// Largest parameter and definition index referenced, for bounds checks.
    fn max_refs(&self) -> (Option<usize>, Option<usize>) {
        let (mut p, mut d) = (None, None);
        self.visit(&mut |e| match e {
            JumpExpr::Shear(k) | JumpExpr::Toric(k) => p = p.max(Some(*k)),
            JumpExpr::Def(k) => d = d.max(Some(*k)),
            _ => {}
        });
        (p, d)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Tail,
    Head,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Half {
    pub edge: usize,
    pub end: End,
}

impl Half {
    pub fn tail(edge: usize) -> Half {
        Half { edge, end: End::Tail }
    }
    pub fn head(edge: usize) -> Half {
        Half { edge, end: End::Head }
    }
    pub fn partner(self) -> Half {
        let end = match self.end {
            End::Tail => End::Head,
            End::Head => End::Tail,
        };
        Half { edge: self.edge, end }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Vertex {
    pub name: String,
    /// Counterclockwise from the cilium; `halves[0]` is the cilium.
    pub halves: Vec<Half>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RibbonGraph {
    pub vertices: Vec<Vertex>,
    pub edges: Vec<String>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Def {
    pub name: String,
    pub expr: JumpExpr,
}

#[derive(Clone, Debug, PartialEq)]
pub struct JumpAssignment {
    pub coords: Vec<Coordinate>,
    pub defs: Vec<Def>,
    /// One expression per edge, for its canonical orientation.
    pub jumps: Vec<JumpExpr>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissiblePair {
    pub graph: RibbonGraph,
    pub jumps: JumpAssignment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathStep {
    Cross { edge: usize, sign: i8 },
    Vertex(usize),
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct PathSpec {
    pub steps: Vec<PathStep>,
}

impl PathSpec {
    pub fn crossings(steps: &[(usize, i8)]) -> PathSpec {
        PathSpec {
            steps: steps.iter().map(|&(edge, sign)| PathStep::Cross { edge, sign }).collect(),
        }
    }

    pub fn then(&self, other: &PathSpec) -> PathSpec {
        let mut steps = self.steps.clone();
        steps.extend_from_slice(&other.steps);
        PathSpec { steps }
    }
}

/// Jump matrices of a pair evaluated at one point.
#[derive(Clone, Debug)]
pub struct Evaluation<T> {
    pub defs: Vec<Mat2<T>>,
    pub jumps: Vec<Mat2<T>>,
    pub inv_jumps: Vec<Mat2<T>>,
}

impl<T: Scalar> Evaluation<T> {
    pub fn outgoing(&self, h: Half) -> Mat2<T> {
        match h.end {
            End::Tail => self.jumps[h.edge],
            End::Head => self.inv_jumps[h.edge],
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AdmissibilityReport {
    pub vertex_residuals: Vec<(String, f64)>,
    /// Max of `‖J(e)·J(−e) − I‖` over edges.
    pub inverse_residual: f64,
    pub max_residual: f64,
    pub tol: f64,
    pub admissible: bool,
}

impl AdmissiblePair {
    pub fn new(graph: RibbonGraph, jumps: JumpAssignment) -> Result<Self> {
        let pair = AdmissiblePair { graph, jumps };
        pair.check_structure()?;
        Ok(pair)
    }

    fn check_structure(&self) -> Result<()> {
        let ne = self.graph.edges.len();
        if self.jumps.jumps.len() != ne {
            return Err(Error::InvalidGraph(format!(
                "{} edges but {} jump expressions",
                ne,
                self.jumps.jumps.len()
            )));
        }
        let mut seen: HashMap<Half, usize> = HashMap::new();
        for (vi, v) in self.graph.vertices.iter().enumerate() {
            if v.halves.is_empty() {
                return Err(Error::InvalidGraph(format!("vertex `{}` has no half-edges", v.name)));
            }
            for h in &v.halves {
                if h.edge >= ne {
                    return Err(Error::InvalidGraph(format!("vertex `{}` references a missing edge", v.name)));
                }
                if seen.insert(*h, vi).is_some() {
                    return Err(Error::InvalidGraph(format!(
                        "half-edge {} listed twice",
                        self.half_label(*h)
                    )));
                }
            }
        }
        for e in 0..ne {
            for h in [Half::tail(e), Half::head(e)] {
                if !seen.contains_key(&h) {
                    return Err(Error::InvalidGraph(format!("half-edge {} is not attached", self.half_label(h))));
                }
            }
        }
        let mut names = HashMap::new();
        for n in self.graph.edges.iter().chain(self.graph.vertices.iter().map(|v| &v.name)) {
            if names.insert(n.clone(), ()).is_some() {
                return Err(Error::Duplicate(n.clone()));
            }
        }
        let np = self.jumps.coords.len();
        let check = |e: &JumpExpr, ndefs: usize, what: &str| -> Result<()> {
            let (p, d) = e.max_refs();
            if p.is_some_and(|p| p >= np) || d.is_some_and(|d| d >= ndefs) {
                return Err(Error::InvalidGraph(format!("{what} references an undefined name")));
            }
            Ok(())
        };
        for (k, def) in self.jumps.defs.iter().enumerate() {
            check(&def.expr, k, &def.name)?;
        }
        for (e, j) in self.jumps.jumps.iter().enumerate() {
            check(j, self.jumps.defs.len(), &self.graph.edges[e])?;
        }
        Ok(())
    }

    pub fn half_label(&self, h: Half) -> String {
        let mark = match h.end {
            End::Tail => '>',
            End::Head => '<',
        };
        format!("{}{}", self.graph.edges[h.edge], mark)
    }

    pub fn edge_index(&self, name: &str) -> Result<usize> {
        self.graph
            .edges
            .iter()
            .position(|e| e == name)
            .ok_or_else(|| Error::UnknownEdge(name.to_string()))
    }

    pub fn vertex_index(&self, name: &str) -> Result<usize> {
        self.graph
            .vertices
            .iter()
            .position(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVertex(name.to_string()))
    }

    pub fn coord_index(&self, name: &str) -> Result<usize> {
        self.jumps
            .coords
            .iter()
            .position(|c| c.name == name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    /// Vertex and position of a half-edge.
    pub fn locate(&self, h: Half) -> (usize, usize) {
        for (vi, v) in self.graph.vertices.iter().enumerate() {
            if let Some(p) = v.halves.iter().position(|x| *x == h) {
                return (vi, p);
            }
        }
        unreachable!("structure checked at construction")
    }

    pub fn evaluate<T: Scalar>(&self, params: &[T]) -> Result<Evaluation<T>> {
        if params.len() != self.jumps.coords.len() {
            return Err(Error::Point(format!(
                "expected {} coordinates, got {}",
                self.jumps.coords.len(),
                params.len()
            )));
        }
        let mut defs = Vec::with_capacity(self.jumps.defs.len());
        for d in &self.jumps.defs {
            let m = d.expr.eval(params, &defs)?;
            defs.push(m);
        }
        let jumps = self
            .jumps
            .jumps
            .iter()
            .map(|j| j.eval(params, &defs))
            .collect::<Result<Vec<_>>>()?;
        let inv_jumps = jumps.iter().map(|j| j.inv()).collect();
        Ok(Evaluation { defs, jumps, inv_jumps })
    }

    pub fn vertex_jumps<T: Scalar>(&self, ev: &Evaluation<T>, v: usize) -> Vec<Mat2<T>> {
        self.graph.vertices[v].halves.iter().map(|h| ev.outgoing(*h)).collect()
    }

    pub fn validate_admissible(&self, point: &[C64], tol: f64) -> Result<AdmissibilityReport> {
        let ev = self.evaluate(point)?;
        Ok(self.admissibility_of(&ev, tol))
    }

    pub fn admissibility_of(&self, ev: &Evaluation<C64>, tol: f64) -> AdmissibilityReport {
        let vertex_residuals: Vec<(String, f64)> = (0..self.graph.vertices.len())
            .map(|v| {
                let p = crate::mat2::product(self.vertex_jumps(ev, v));
                (self.graph.vertices[v].name.clone(), p.dist_identity())
            })
            .collect();
        let inverse_residual = ev
            .jumps
            .iter()
            .zip(&ev.inv_jumps)
            .map(|(j, ji)| (*j * *ji).dist_identity())
            .fold(0.0, f64::max);
        let max_residual = vertex_residuals
            .iter()
            .map(|(_, r)| *r)
            .fold(inverse_residual, f64::max);
        AdmissibilityReport {
            vertex_residuals,
            inverse_residual,
            max_residual,
            tol,
            admissible: max_residual < tol,
        }
    }

    pub fn path_monodromy<T: Scalar>(&self, path: &PathSpec, params: &[T]) -> Result<Mat2<T>> {
        let ev = self.evaluate(params)?;
        self.path_monodromy_of(path, &ev)
    }

    pub fn path_monodromy_of<T: Scalar>(&self, path: &PathSpec, ev: &Evaluation<T>) -> Result<Mat2<T>> {
        let mut acc = Mat2::identity();
        for step in &path.steps {
            match *step {
                PathStep::Vertex(v) => {
                    return Err(Error::PathThroughVertex(self.graph.vertices[v].name.clone()))
                }
                PathStep::Cross { edge, sign } => {
                    if edge >= ev.jumps.len() {
                        return Err(Error::UnknownEdge(format!("#{edge}")));
                    }
                    acc = acc * if sign > 0 { ev.jumps[edge] } else { ev.inv_jumps[edge] };
                }
            }
        }
        Ok(acc)
    }

    /// Expression for the outgoing jump at a half-edge.
    pub fn outgoing_expr(&self, h: Half) -> JumpExpr {
        let j = self.jumps.jumps[h.edge].clone();
        match h.end {
            End::Tail => j,
            End::Head => JumpExpr::inv(j),
        }
    }

    /// Collapses an edge joining two distinct vertices.
    pub fn merge_vertices(&self, edge: &str) -> Result<AdmissiblePair> {
        let e = self.edge_index(edge)?;
        let (v1, p1) = self.locate(Half::tail(e));
        let (v2, p2) = self.locate(Half::head(e));
        if v1 == v2 {
            return Err(Error::LoopEdge(edge.to_string()));
        }
        let after = |v: usize, p: usize| -> Vec<Half> {
            let hs = &self.graph.vertices[v].halves;
            (1..hs.len()).map(|k| hs[(p + k) % hs.len()]).collect()
        };
        let mut halves = after(v1, p1);
        halves.extend(after(v2, p2));
        if p1 != 0 {
            let cil = self.graph.vertices[v1].halves[0];
            let k = halves.iter().position(|h| *h == cil).unwrap();
            halves.rotate_left(k);
        }
        let mut g = self.clone();
        g.graph.vertices[v1] = Vertex {
            name: format!("{}_{}", self.graph.vertices[v1].name, self.graph.vertices[v2].name),
            halves,
        };
        g.graph.vertices.remove(v2);
        g.drop_unused_edges();
        Ok(g)
    }

    /// Fuses two parallel edges that are adjacent at both ends.
    pub fn zip_edges(&self, e1: &str, e2: &str) -> Result<AdmissiblePair> {
        let i1 = self.edge_index(e1)?;
        let i2 = self.edge_index(e2)?;
        let fail = || Error::NotZippable(e1.to_string(), e2.to_string());
        if i1 == i2 {
            return Err(fail());
        }
        let next = |h: Half| -> Half {
            let (v, p) = self.locate(h);
            let hs = &self.graph.vertices[v].halves;
            hs[(p + 1) % hs.len()]
        };
        let ends = |e: usize| [Half::tail(e), Half::head(e)];
        let mut found = None;
        'search: for (a, b) in [(i1, i2), (i2, i1)] {
            for h1 in ends(a) {
                for h2 in ends(b) {
                    if next(h1) == h2 && next(h2.partner()) == h1.partner() {
                        found = Some((h1, h2));
                        break 'search;
                    }
                }
            }
        }
        let (h1, h2) = found.ok_or_else(fail)?;
        let jump = JumpExpr::prod(vec![self.outgoing_expr(h1), self.outgoing_expr(h2)]);
        let mut g = self.clone();
        let ne = g.graph.edges.len();
        g.graph.edges.push(format!("{}_{}", self.graph.edges[h1.edge], self.graph.edges[h2.edge]));
        g.jumps.jumps.push(jump);
        g.replace_pair(h1, h2, Half::tail(ne));
        g.replace_pair(h2.partner(), h1.partner(), Half::head(ne));
        g.drop_unused_edges();
        Ok(g)
    }

    /// Replaces consecutive half-edges `first, second` by `new`.
    fn replace_pair(&mut self, first: Half, second: Half, new: Half) {
        let (v, p) = self.locate(first);
        let hs = &mut self.graph.vertices[v].halves;
        hs[p] = new;
        let q = hs.iter().position(|h| *h == second).unwrap();
        hs.remove(q);
        if q == 0 {
            let k = hs.iter().position(|h| *h == new).unwrap();
            hs.rotate_left(k);
        }
    }

    fn drop_unused_edges(&mut self) {
        let mut used = vec![false; self.graph.edges.len()];
        for v in &self.graph.vertices {
            for h in &v.halves {
                used[h.edge] = true;
            }
        }
        let mut remap = vec![usize::MAX; used.len()];
        let mut edges = Vec::new();
        let mut jumps = Vec::new();
        for (e, u) in used.iter().enumerate() {
            if *u {
                remap[e] = edges.len();
                edges.push(self.graph.edges[e].clone());
                jumps.push(self.jumps.jumps[e].clone());
            }
        }
        for v in &mut self.graph.vertices {
            for h in &mut v.halves {
                h.edge = remap[h.edge];
            }
        }
        self.graph.edges = edges;
        self.jumps.jumps = jumps;
    }

    /// Rotates the cilium of a vertex forward by `k` half-edges.
    pub fn rotate_cilium(&self, vertex: usize, k: usize) -> AdmissiblePair {
        let mut g = self.clone();
        let hs = &mut g.graph.vertices[vertex].halves;
        let n = hs.len();
        hs.rotate_left(k % n);
        g
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    // Vertex u: [x>, y>]; vertex w: [y<, x<]; J(x) = S(z0), J(y) = S(z0)⁻¹.
    fn two_valent() -> AdmissiblePair {
        let graph = RibbonGraph {
            vertices: vec![
                Vertex { name: "u".into(), halves: vec![Half::tail(0), Half::tail(1)] },
                Vertex { name: "w".into(), halves: vec![Half::head(1), Half::head(0)] },
            ],
            edges: vec!["x".into(), "y".into()],
        };
        let jumps = JumpAssignment {
            coords: vec![Coordinate { name: "z0".into(), role: Role::Shear }],
            defs: vec![],
            jumps: vec![JumpExpr::Shear(0), JumpExpr::inv(JumpExpr::Shear(0))],
        };
        AdmissiblePair::new(graph, jumps).unwrap()
    }

    #[test]
    fn two_valent_vertex_is_admissible() {
        let r = two_valent().validate_admissible(&[C64::new(1.3, 0.4)], 1e-12).unwrap();
        assert!(r.admissible);
        assert_eq!(r.vertex_residuals[0].1, 0.0);
    }

    #[test]
    fn q_vertex_of_plumbing_gadget() {
        let lam = Mat2::diag(c(-2.5), c(-0.4));
        let b: Mat2<C64> = b_matrix();
        let p = crate::mat2::product([b.inv(), lam, b, lam]);
        assert!(p.dist_identity() < 1e-14);
    }

    #[test]
    fn structure_errors_are_reported() {
        let mut g = two_valent();
        g.graph.vertices[1].halves.pop();
        assert!(matches!(AdmissiblePair::new(g.graph, g.jumps), Err(Error::InvalidGraph(_))));
        let mut g = two_valent();
        g.jumps.jumps[0] = JumpExpr::Shear(3);
        assert!(AdmissiblePair::new(g.graph, g.jumps).is_err());
    }

    #[test]
    fn path_monodromy_basics() {
        let g = two_valent();
        let pt = [C64::new(0.8, -0.6)];
        let empty = g.path_monodromy(&PathSpec::default(), &pt).unwrap();
        assert_eq!(empty, Mat2::identity());
        let back = g.path_monodromy(&PathSpec::crossings(&[(0, 1), (0, -1)]), &pt).unwrap();
        assert!(back.dist_identity() < 1e-15);
        let through = PathSpec { steps: vec![PathStep::Vertex(0)] };
        assert!(matches!(g.path_monodromy(&through, &pt), Err(Error::PathThroughVertex(_))));
    }

    #[test]
    fn zip_with_inverse_gives_identity_edge() {
        let g = two_valent().zip_edges("x", "y").unwrap();
        assert_eq!(g.graph.edges.len(), 1);
        let ev = g.evaluate(&[C64::new(1.7, 0.2)]).unwrap();
        assert!(ev.jumps[0].dist_identity() < 1e-15);
    }

    #[test]
    fn merge_rejects_loops_and_zip_rejects_non_adjacent() {
        let g = two_valent();
        let m = g.merge_vertices("x").unwrap();
        assert_eq!(m.graph.vertices.len(), 1);
        assert!(matches!(m.merge_vertices("y"), Err(Error::LoopEdge(_))));
        assert!(matches!(g.zip_edges("x", "x"), Err(Error::NotZippable(_, _))));
    }
}
