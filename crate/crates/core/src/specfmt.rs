//! Plain-text documents for admissible pairs and surface decompositions.
//!
//! The grammar is described in `docs/graph-spec.md`. Serialization of a
//! parsed graph document reproduces the same document.

use crate::builders::{build_gamma2, Gamma2, Side, SurfaceSpec, Triangulation};
use crate::builders::gamma2::{ContourSpec, PieceSpec};
use crate::coords::{ConstraintSet, CoordinateSystem, Relation};
use crate::error::{Error, Result};
use crate::graph::{
    AdmissiblePair, Coordinate, Def, End, Half, JumpAssignment, JumpExpr, PathSpec, PathStep, RibbonGraph, Role,
    Vertex,
};
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;
use std::collections::HashMap;
use std::fmt::Write;

/// A pair with its coordinate system and named paths.
#[derive(Clone, Debug)]
pub struct GraphDocument {
    pub pair: AdmissiblePair,
    pub coords: CoordinateSystem,
    pub paths: Vec<(String, PathSpec)>,
}

/// A decomposition with one triangulation per piece.
#[derive(Clone, Debug)]
pub struct DecompositionDocument {
    pub spec: SurfaceSpec,
    pub triangulations: Vec<Triangulation>,
}

impl DecompositionDocument {
    pub fn build(&self) -> Result<Gamma2> {
        build_gamma2(&self.spec, &self.triangulations)
    }
}

#[derive(Clone, Debug)]
#[allow(clippy::large_enum_variant)]
pub enum Document {
    Graph(GraphDocument),
    Decomposition(DecompositionDocument),
}

const GRAPH_SECTIONS: [&str; 8] = ["parameters", "derived", "constraints", "free", "defs", "edges", "vertices", "paths"];

fn perr(line: usize, col: usize, msg: impl Into<String>) -> Error {
    Error::Parse { line, col, msg: msg.into() }
}

#[derive(Clone, Copy)]
struct Line<'a> {
    no: usize,
    text: &'a str,
}

impl<'a> Line<'a> {
    /// Whitespace-separated tokens with their 1-based columns.
    fn tokens(&self) -> Vec<(usize, &'a str)> {
        let mut out = Vec::new();
        let mut start = None;
        for (i, ch) in self.text.char_indices() {
            match (ch.is_whitespace(), start) {
                (true, Some(s)) => {
                    out.push((s + 1, &self.text[s..i]));
                    start = None;
                }
                (false, None) => start = Some(i),
                _ => {}
            }
        }
        if let Some(s) = start {
            out.push((s + 1, &self.text[s..]));
        }
        out
    }

    fn err(&self, col: usize, msg: impl Into<String>) -> Error {
        perr(self.no, col, msg)
    }

    /// Splits `name = rest`, returning the name and the column of `rest`.
    fn assignment(&self) -> Result<(&'a str, usize, &'a str)> {
        let eq = self.text.find('=').ok_or_else(|| self.err(1, "expected `name = …`"))?;
        let name = self.text[..eq].trim();
        check_ident(name).map_err(|m| self.err(1, m))?;
        let rest = &self.text[eq + 1..];
        let lead = rest.len() - rest.trim_start().len();
        Ok((name, eq + 2 + lead, rest.trim()))
    }
}

fn check_ident(s: &str) -> std::result::Result<(), String> {
    let ok = !s.is_empty()
        && s.chars().next().is_some_and(|c| c.is_ascii_alphabetic() || c == '_')
        && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_');
    if ok {
        Ok(())
    } else {
        Err(format!("invalid name `{s}`"))
    }
}

/// Splits a document into `[section]` blocks, dropping comments and blanks.
fn sections(text: &str) -> Result<Vec<(String, usize, Vec<Line<'_>>)>> {
    let mut out: Vec<(String, usize, Vec<Line>)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let body = raw.split('#').next().unwrap_or("");
        let t = body.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(inner) = t.strip_prefix('[') {
            let name = inner
                .strip_suffix(']')
                .ok_or_else(|| perr(no, raw.len(), "unterminated section header"))?;
            out.push((name.trim().to_string(), no, Vec::new()));
            continue;
        }
        let (_, _, lines) = out.last_mut().ok_or_else(|| perr(no, 1, "content before the first section"))?;
        lines.push(Line { no, text: body });
    }
    Ok(out)
}

pub fn parse_document(text: &str) -> Result<Document> {
    let secs = sections(text)?;
    let first = secs.first().ok_or_else(|| perr(1, 1, "empty document"))?;
    if GRAPH_SECTIONS.contains(&first.0.as_str()) {
        Ok(Document::Graph(parse_graph(text)?))
    } else {
        Ok(Document::Decomposition(parse_decomposition(text)?))
    }
}

// ---------- expressions ----------

struct ExprParser<'a, 'n> {
    src: &'a str,
    pos: usize,
    line: usize,
    col0: usize,
    params: &'n HashMap<String, usize>,
    defs: &'n HashMap<String, usize>,
}

impl<'a, 'n> ExprParser<'a, 'n> {
    fn err(&self, msg: impl Into<String>) -> Error {
        perr(self.line, self.col0 + self.pos, msg)
    }

    fn skip_ws(&mut self) {
        while self.src[self.pos..].starts_with(char::is_whitespace) {
            self.pos += self.src[self.pos..].chars().next().unwrap().len_utf8();
        }
    }

    fn eat(&mut self, tok: &str) -> bool {
        self.skip_ws();
        if self.src[self.pos..].starts_with(tok) {
            self.pos += tok.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, tok: &str) -> Result<()> {
        if self.eat(tok) {
            Ok(())
        } else {
            Err(self.err(format!("expected `{tok}`")))
        }
    }

    fn ident(&mut self) -> Result<&'a str> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let n = rest.find(|c: char| !(c.is_ascii_alphanumeric() || c == '_')).unwrap_or(rest.len());
        if n == 0 || rest.starts_with(|c: char| c.is_ascii_digit()) {
            return Err(self.err("expected a name"));
        }
        self.pos += n;
        Ok(&rest[..n])
    }

    fn number(&mut self) -> Result<f64> {
        self.skip_ws();
        let rest = &self.src[self.pos..];
        let n = rest
            .find(|c: char| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-')) || c.is_whitespace())
            .unwrap_or(rest.len());
        let v = rest[..n].parse::<f64>().map_err(|_| self.err("expected a number"))?;
        self.pos += n;
        Ok(v)
    }

    fn complex(&mut self) -> Result<C64> {
        let re = self.number()?;
        let im = self.number()?;
        Ok(C64::new(re, im))
    }

    fn expr(&mut self) -> Result<JumpExpr> {
        let mut items = vec![self.term()?];
        while self.eat("*") {
            items.push(self.term()?);
        }
        Ok(if items.len() == 1 { items.pop().unwrap() } else { JumpExpr::Prod(items) })
    }

    fn param(&mut self) -> Result<usize> {
        self.expect("(")?;
        self.skip_ws();
        let start = self.pos;
        let name = self.ident()?;
        let Some(&k) = self.params.get(name) else {
            self.pos = start;
            return Err(self.err(format!("unknown parameter `{name}`")));
        };
        self.expect(")")?;
        Ok(k)
    }

    fn wrapped(&mut self) -> Result<Box<JumpExpr>> {
        self.expect("(")?;
        let e = self.expr()?;
        self.expect(")")?;
        Ok(Box::new(e))
    }

    fn term(&mut self) -> Result<JumpExpr> {
        self.skip_ws();
        if self.eat("(") {
            let e = self.expr()?;
            self.expect(")")?;
            return Ok(e);
        }
        if self.eat("[") {
            let a = self.complex()?;
            self.expect(",")?;
            let b = self.complex()?;
            self.expect(";")?;
            let c = self.complex()?;
            self.expect(",")?;
            let d = self.complex()?;
            self.expect("]")?;
            return Ok(JumpExpr::Lit(Mat2::new(a, b, c, d)));
        }
        let start = self.pos;
        let name = self.ident()?;
        Ok(match name {
            "I" => JumpExpr::Identity,
            "A" => JumpExpr::A,
            "B" => JumpExpr::B,
            "S" => JumpExpr::Shear(self.param()?),
            "T" => JumpExpr::Toric(self.param()?),
            "inv" => JumpExpr::Inv(self.wrapped()?),
            "eigval" => JumpExpr::Eigval(self.wrapped()?),
            "eigvec" => JumpExpr::Eigvec(self.wrapped()?),
            other => match self.defs.get(other) {
                Some(&k) => JumpExpr::Def(k),
                None => {
                    self.pos = start;
                    return Err(self.err(format!("unknown definition `{other}`")));
                }
            },
        })
    }
}

fn parse_expr(
    src: &str,
    line: usize,
    col0: usize,
    params: &HashMap<String, usize>,
    defs: &HashMap<String, usize>,
) -> Result<JumpExpr> {
    let mut p = ExprParser { src, pos: 0, line, col0, params, defs };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != src.len() {
        return Err(p.err("unexpected trailing input"));
    }
    Ok(e)
}

fn write_expr(out: &mut String, e: &JumpExpr, coords: &[Coordinate], defs: &[Def]) {
    match e {
        JumpExpr::Identity => out.push('I'),
        JumpExpr::A => out.push('A'),
        JumpExpr::B => out.push('B'),
        JumpExpr::Shear(k) => {
            let _ = write!(out, "S({})", coords[*k].name);
        }
        JumpExpr::Toric(k) => {
            let _ = write!(out, "T({})", coords[*k].name);
        }
        JumpExpr::Def(k) => out.push_str(&defs[*k].name),
        JumpExpr::Lit(m) => {
            let c = |z: C64| format!("{:?} {:?}", z.re, z.im);
            let _ = write!(out, "[{}, {}; {}, {}]", c(m.a), c(m.b), c(m.c), c(m.d));
        }
        JumpExpr::Inv(x) | JumpExpr::Eigval(x) | JumpExpr::Eigvec(x) => {
            out.push_str(match e {
                JumpExpr::Inv(_) => "inv(",
                JumpExpr::Eigval(_) => "eigval(",
                _ => "eigvec(",
            });
            write_expr(out, x, coords, defs);
            out.push(')');
        }
        JumpExpr::Prod(items) => {
            for (i, it) in items.iter().enumerate() {
                if i > 0 {
                    out.push_str(" * ");
                }
                if matches!(it, JumpExpr::Prod(_)) {
                    out.push('(');
                    write_expr(out, it, coords, defs);
                    out.push(')');
                } else {
                    write_expr(out, it, coords, defs);
                }
            }
        }
    }
}

pub fn expr_to_string(e: &JumpExpr, coords: &[Coordinate], defs: &[Def]) -> String {
    let mut s = String::new();
    write_expr(&mut s, e, coords, defs);
    s
}

// ---------- graph documents ----------

fn parse_coord_line(line: &Line) -> Result<Coordinate> {
    let toks = line.tokens();
    if toks.len() != 2 {
        return Err(line.err(1, "expected `name role`"));
    }
    check_ident(toks[0].1).map_err(|m| line.err(toks[0].0, m))?;
    let role = Role::from_keyword(toks[1].1)
        .ok_or_else(|| line.err(toks[1].0, format!("unknown role `{}` (shear, length, twist, toric)", toks[1].1)))?;
    Ok(Coordinate { name: toks[0].1.to_string(), role })
}

fn parse_relation(line: &Line, known: &HashMap<String, usize>) -> Result<Relation> {
    let toks = line.tokens();
    let eq = toks.iter().position(|t| t.1 == "=").ok_or_else(|| line.err(1, "expected `=`"))?;
    let bar = toks.iter().position(|t| t.1 == "|").ok_or_else(|| line.err(1, "expected `|` before pivots"))?;
    if eq % 2 != 0 || eq == 0 || bar != eq + 3 {
        return Err(line.err(1, "expected `c name … = re im | pivots`"));
    }
    let name_of = |(col, s): (usize, &str)| -> Result<String> {
        if known.contains_key(s) {
            Ok(s.to_string())
        } else {
            Err(line.err(col, format!("unknown coordinate `{s}`")))
        }
    };
    let num = |(col, s): (usize, &str)| -> Result<f64> {
        s.parse::<f64>().map_err(|_| line.err(col, format!("expected a number, found `{s}`")))
    };
    let mut terms = Vec::new();
    for pair in toks[..eq].chunks(2) {
        terms.push((name_of(pair[1])?, num(pair[0])?));
    }
    let offset = C64::new(num(toks[eq + 1])?, num(toks[eq + 2])?);
    let pivots = toks[bar + 1..].iter().map(|t| name_of(*t)).collect::<Result<Vec<_>>>()?;
    if pivots.is_empty() {
        return Err(line.err(line.text.len(), "a relation needs at least one pivot"));
    }
    Ok(Relation::new(terms, offset, pivots))
}

fn parse_half(line: &Line, col: usize, tok: &str, edges: &HashMap<String, usize>) -> Result<Half> {
    let (name, end) = if let Some(n) = tok.strip_suffix('>') {
        (n, End::Tail)
    } else if let Some(n) = tok.strip_suffix('<') {
        (n, End::Head)
    } else {
        return Err(line.err(col, format!("half-edge `{tok}` must end in `>` or `<`")));
    };
    let edge = *edges.get(name).ok_or_else(|| line.err(col, format!("unknown edge `{name}`")))?;
    Ok(Half { edge, end })
}

pub fn parse_graph(text: &str) -> Result<GraphDocument> {
    let secs = sections(text)?;
    let mut by_name: HashMap<&str, (usize, &Vec<Line>)> = HashMap::new();
    for (name, no, lines) in &secs {
        if !GRAPH_SECTIONS.contains(&name.as_str()) {
            return Err(perr(*no, 2, format!("unknown section `{name}`")));
        }
        if by_name.insert(name.as_str(), (*no, lines)).is_some() {
            return Err(perr(*no, 2, format!("section `{name}` appears twice")));
        }
    }
    let empty = Vec::new();
    let get = |n: &str| by_name.get(n).map(|x| x.1).unwrap_or(&empty);

    let params: Vec<Coordinate> = get("parameters").iter().map(parse_coord_line).collect::<Result<_>>()?;
    let derived: Vec<Coordinate> = get("derived").iter().map(parse_coord_line).collect::<Result<_>>()?;
    let mut known: HashMap<String, usize> = HashMap::new();
    for (i, c) in params.iter().chain(&derived).enumerate() {
        if known.insert(c.name.clone(), i).is_some() {
            return Err(perr(0, 0, format!("duplicate coordinate `{}`", c.name)));
        }
    }
    let param_idx: HashMap<String, usize> = params.iter().enumerate().map(|(i, c)| (c.name.clone(), i)).collect();
    let relations: Vec<Relation> =
        get("constraints").iter().map(|l| parse_relation(l, &known)).collect::<Result<_>>()?;
    let mut order: Vec<String> = Vec::new();
    for l in get("free") {
        for (col, t) in l.tokens() {
            if !known.contains_key(t) {
                return Err(l.err(col, format!("unknown coordinate `{t}`")));
            }
            order.push(t.to_string());
        }
    }
    let declared_free = by_name.contains_key("free").then(|| order.clone());
    order.extend(params.iter().chain(&derived).map(|c| c.name.clone()));
    let coords = CoordinateSystem::new(params.clone(), derived, ConstraintSet { relations }, &order)?;
    if let Some(f) = declared_free {
        if f != coords.free {
            let (no, _) = by_name["free"];
            return Err(perr(no, 1, format!("free list {:?} does not match the constraints ({:?})", f, coords.free)));
        }
    }

    let mut def_idx: HashMap<String, usize> = HashMap::new();
    let mut defs = Vec::new();
    for l in get("defs") {
        let (name, col, rest) = l.assignment()?;
        let expr = parse_expr(rest, l.no, col, &param_idx, &def_idx)?;
        if def_idx.insert(name.to_string(), defs.len()).is_some() {
            return Err(l.err(1, format!("duplicate definition `{name}`")));
        }
        defs.push(Def { name: name.to_string(), expr });
    }

    let mut edge_idx: HashMap<String, usize> = HashMap::new();
    let mut edges = Vec::new();
    let mut jumps = Vec::new();
    for l in get("edges") {
        let (name, col, rest) = l.assignment()?;
        let expr = parse_expr(rest, l.no, col, &param_idx, &def_idx)?;
        if edge_idx.insert(name.to_string(), edges.len()).is_some() {
            return Err(l.err(1, format!("duplicate edge `{name}`")));
        }
        edges.push(name.to_string());
        jumps.push(expr);
    }

    let mut vertices = Vec::new();
    let mut vertex_idx: HashMap<String, usize> = HashMap::new();
    for l in get("vertices") {
        let (name, col, rest) = l.assignment()?;
        let sub = Line { no: l.no, text: rest };
        let halves = sub
            .tokens()
            .into_iter()
            .map(|(c, t)| parse_half(&sub, c + col - 1, t, &edge_idx))
            .collect::<Result<Vec<_>>>()?;
        vertex_idx.insert(name.to_string(), vertices.len());
        vertices.push(Vertex { name: name.to_string(), halves });
    }

    let mut paths = Vec::new();
    for l in get("paths") {
        let (name, col, rest) = l.assignment()?;
        let sub = Line { no: l.no, text: rest };
        let mut steps = Vec::new();
        for (c, t) in sub.tokens() {
            let c = c + col - 1;
            let step = if let Some(v) = t.strip_prefix('@') {
                PathStep::Vertex(*vertex_idx.get(v).ok_or_else(|| l.err(c, format!("unknown vertex `{v}`")))?)
            } else {
                let (sign, e) = match t.split_at(1) {
                    ("+", e) => (1, e),
                    ("-", e) => (-1, e),
                    _ => return Err(l.err(c, format!("path step `{t}` needs a sign or `@`"))),
                };
                let edge = *edge_idx.get(e).ok_or_else(|| l.err(c, format!("unknown edge `{e}`")))?;
                PathStep::Cross { edge, sign }
            };
            steps.push(step);
        }
        paths.push((name.to_string(), PathSpec { steps }));
    }

    let pair = AdmissiblePair::new(
        RibbonGraph { vertices, edges },
        JumpAssignment { coords: params, defs, jumps },
    )?;
    Ok(GraphDocument { pair, coords, paths })
}

pub fn write_graph(doc: &GraphDocument) -> String {
    let mut s = String::new();
    let cs = &doc.coords;
    let pair = &doc.pair;
    s.push_str("[parameters]\n");
    for c in &cs.params {
        let _ = writeln!(s, "{} {}", c.name, c.role.keyword());
    }
    if !cs.derived.is_empty() {
        s.push_str("\n[derived]\n");
        for c in &cs.derived {
            let _ = writeln!(s, "{} {}", c.name, c.role.keyword());
        }
    }
    if !cs.constraints.relations.is_empty() {
        s.push_str("\n[constraints]\n");
        for r in &cs.constraints.relations {
            let terms: Vec<String> = r.terms.iter().map(|(n, c)| format!("{c:+?} {n}")).collect();
            let _ = writeln!(s, "{} = {:?} {:?} | {}", terms.join(" "), r.offset.re, r.offset.im, r.pivots.join(" "));
        }
    }
    s.push_str("\n[free]\n");
    let _ = writeln!(s, "{}", cs.free.join(" "));
    let (coords, defs) = (&pair.jumps.coords, &pair.jumps.defs);
    if !defs.is_empty() {
        s.push_str("\n[defs]\n");
        for d in defs {
            let _ = writeln!(s, "{} = {}", d.name, expr_to_string(&d.expr, coords, defs));
        }
    }
    s.push_str("\n[edges]\n");
    for (n, j) in pair.graph.edges.iter().zip(&pair.jumps.jumps) {
        let _ = writeln!(s, "{} = {}", n, expr_to_string(j, coords, defs));
    }
    s.push_str("\n[vertices]\n");
    for v in &pair.graph.vertices {
        let hs: Vec<String> = v.halves.iter().map(|h| pair.half_label(*h)).collect();
        let _ = writeln!(s, "{} = {}", v.name, hs.join(" "));
    }
    if !doc.paths.is_empty() {
        s.push_str("\n[paths]\n");
        for (name, p) in &doc.paths {
            let steps: Vec<String> = p
                .steps
                .iter()
                .map(|st| match *st {
                    PathStep::Cross { edge, sign } => {
                        format!("{}{}", if sign > 0 { '+' } else { '-' }, pair.graph.edges[edge])
                    }
                    PathStep::Vertex(v) => format!("@{}", pair.graph.vertices[v].name),
                })
                .collect();
            let _ = writeln!(s, "{} = {}", name, steps.join(" "));
        }
    }
    s
}

/// Loop around a boundary vertex through the piece side: crosses every
/// half-edge after the last gadget half in cyclic order.
fn boundary_loop(pair: &AdmissiblePair, vertex: &str, gadget: &[String]) -> Result<PathSpec> {
    let v = pair.vertex_index(vertex)?;
    let halves = &pair.graph.vertices[v].halves;
    let is_gadget = |h: &Half| gadget.contains(&pair.graph.edges[h.edge]);
    let last = halves
        .iter()
        .rposition(is_gadget)
        .ok_or_else(|| Error::InvalidGraph(format!("vertex `{vertex}` has no gadget edge")))?;
    let steps: Vec<(usize, i8)> = (1..halves.len())
        .map(|k| halves[(last + k) % halves.len()])
        .take_while(|h| !is_gadget(h))
        .map(|h| (h.edge, if h.end == End::Tail { 1 } else { -1 }))
        .collect();
    Ok(PathSpec::crossings(&steps))
}

impl From<&Gamma2> for GraphDocument {
    /// Carries, per contour, the loops around its two boundary vertices.
    fn from(g: &Gamma2) -> Self {
        let mut paths = Vec::new();
        for c in &g.contours {
            for (side, v) in [("tilde", &c.tilde_vertex), ("hat", &c.hat_vertex)] {
                let p = boundary_loop(&g.pair, v, &c.gadget_edges).expect("builder vertices carry a gadget edge");
                paths.push((format!("loop_{}_{side}", c.name), p));
            }
        }
        GraphDocument { pair: g.pair.clone(), coords: g.coords.clone(), paths }
    }
}

// ---------- decomposition documents ----------

fn parse_usize(line: &Line, (col, s): (usize, &str)) -> Result<usize> {
    s.parse::<usize>().map_err(|_| line.err(col, format!("expected a count, found `{s}`")))
}

fn parse_side(line: &Line, (col, s): (usize, &str), pieces: &[PieceSpec]) -> Result<Side> {
    let (p, b) = s.split_once(':').ok_or_else(|| line.err(col, "expected `piece:boundary`"))?;
    let piece = pieces.iter().position(|x| x.name == p).ok_or_else(|| line.err(col, format!("unknown piece `{p}`")))?;
    let b: usize = b.parse().map_err(|_| line.err(col, "boundary must be a positive integer"))?;
    if b == 0 || b > pieces[piece].boundaries {
        return Err(line.err(col, format!("piece `{p}` has no boundary {b}")));
    }
    Ok(Side { piece, boundary: b - 1 })
}

fn parse_face_side(line: &Line, (col, s): (usize, &str)) -> Result<(usize, bool)> {
    let (num, fwd) = match s.split_at(s.len().saturating_sub(1)) {
        (n, "+") => (n, true),
        (n, "-") => (n, false),
        _ => return Err(line.err(col, format!("face side `{s}` must end in `+` or `-`"))),
    };
    let e: usize = num.parse().map_err(|_| line.err(col, "face sides are edge numbers"))?;
    if e == 0 {
        return Err(line.err(col, "edge numbers start at 1"));
    }
    Ok((e - 1, fwd))
}

pub fn parse_decomposition(text: &str) -> Result<DecompositionDocument> {
    let secs = sections(text)?;
    let mut pieces: Vec<PieceSpec> = Vec::new();
    let mut contours: Vec<(Line, Vec<(usize, &str)>)> = Vec::new();
    let mut trinions: Vec<(Line, Vec<(usize, &str)>)> = Vec::new();
    let mut tris: Vec<(String, usize, Vec<Line>)> = Vec::new();
    for (name, no, lines) in &secs {
        match name.as_str() {
            "pieces" => {
                for l in lines {
                    let t = l.tokens();
                    if t.len() != 5 || t[1].1 != "genus" || t[3].1 != "boundaries" {
                        return Err(l.err(1, "expected `name genus G boundaries K`"));
                    }
                    check_ident(t[0].1).map_err(|m| l.err(t[0].0, m))?;
                    pieces.push(PieceSpec {
                        name: t[0].1.to_string(),
                        genus: parse_usize(l, t[2])?,
                        boundaries: parse_usize(l, t[4])?,
                    });
                }
            }
            "contours" => contours.extend(lines.iter().map(|l| (*l, l.tokens()))),
            "trinions" => trinions.extend(lines.iter().map(|l| (*l, l.tokens()))),
            other => match other.strip_prefix("triangulation ") {
                Some(p) => tris.push((p.trim().to_string(), *no, lines.clone())),
                None => return Err(perr(*no, 2, format!("unknown section `{other}`"))),
            },
        }
    }
    if !trinions.is_empty() {
        if !pieces.is_empty() || !contours.is_empty() || !tris.is_empty() {
            return Err(perr(secs[0].1, 1, "a trinion graph cannot be mixed with pieces or contours"));
        }
        let mut names: Vec<String> = Vec::new();
        let mut outlets = Vec::new();
        for (l, t) in &trinions {
            if t.len() != 5 || t[1].1 != "=" {
                return Err(l.err(1, "expected `T = e1 e2 e3`"));
            }
            let mut out = [0; 3];
            for (k, tok) in t[2..].iter().enumerate() {
                check_ident(tok.1).map_err(|m| l.err(tok.0, m))?;
                out[k] = match names.iter().position(|n| n == tok.1) {
                    Some(i) => i,
                    None => {
                        names.push(tok.1.to_string());
                        names.len() - 1
                    }
                };
            }
            outlets.push(out);
        }
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let spec = SurfaceSpec::from_trinion_graph(&outlets, &refs)?;
        let triangulations = spec.standard_triangulations()?;
        return Ok(DecompositionDocument { spec, triangulations });
    }
    let mut cs = Vec::new();
    for (l, t) in &contours {
        if t.len() != 3 {
            return Err(l.err(1, "expected `name piece:boundary piece:boundary`"));
        }
        check_ident(t[0].1).map_err(|m| l.err(t[0].0, m))?;
        cs.push(ContourSpec {
            name: t[0].1.to_string(),
            tilde: parse_side(l, t[1], &pieces)?,
            hat: parse_side(l, t[2], &pieces)?,
        });
    }
    let spec = SurfaceSpec { pieces, contours: cs };
    spec.genus()?;
    let mut triangulations = spec.standard_triangulations()?;
    for (p, no, lines) in tris {
        let k = spec
            .pieces
            .iter()
            .position(|x| x.name == p)
            .ok_or_else(|| perr(no, 2, format!("unknown piece `{p}`")))?;
        let mut faces = Vec::new();
        for l in &lines {
            let t = l.tokens();
            if t.len() != 4 || t[0].1 != "face" {
                return Err(l.err(1, "expected `face e± e± e±`"));
            }
            faces.push([parse_face_side(l, t[1])?, parse_face_side(l, t[2])?, parse_face_side(l, t[3])?]);
        }
        let t = Triangulation::from_faces(&faces).map_err(|e| perr(no, 1, e.to_string()))?;
        t.validate().map_err(|e| perr(no, 1, e.to_string()))?;
        triangulations[k] = t;
    }
    Ok(DecompositionDocument { spec, triangulations })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_gamma2, TrinionGraph2};

    fn roundtrip(doc: &GraphDocument) {
        let text = write_graph(doc);
        let back = parse_graph(&text).unwrap();
        assert_eq!(back.pair, doc.pair);
        assert_eq!(back.coords.free, doc.coords.free);
        assert_eq!(back.coords.lift, doc.coords.lift);
        assert_eq!(back.coords.shift, doc.coords.shift);
        assert_eq!(write_graph(&back), text);
    }

    #[test]
    fn builder_output_round_trips() {
        for spec in [SurfaceSpec::separating(1, 1), SurfaceSpec::nonseparating(2), TrinionGraph2::Theta.spec().unwrap()] {
            let g2 = build_gamma2(&spec, &spec.standard_triangulations().unwrap()).unwrap();
            roundtrip(&GraphDocument::from(&g2));
        }
    }

    #[test]
    fn boundary_loops_carry_contour_eigenvalues() {
        use crate::coords::Domain;
        use rand::SeedableRng;
        let spec = SurfaceSpec::separating(1, 1);
        let g2 = build_gamma2(&spec, &spec.standard_triangulations().unwrap()).unwrap();
        let doc = GraphDocument::from(&g2);
        let names: Vec<&str> = doc.paths.iter().map(|(n, _)| n.as_str()).collect();
        assert_eq!(names, ["loop_c_tilde", "loop_c_hat"]);
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let k = doc.coords.all_coords().position(|c| c.name == "l_c").unwrap();
        for _ in 0..10 {
            let p = doc.coords.sample(&mut rng, &Domain::default()).unwrap();
            let lam = p.values[k];
            for (_, path) in &doc.paths {
                let t = doc.pair.path_monodromy(path, doc.coords.params_of(&p)).unwrap().trace();
                assert!((t + lam + 1.0 / lam).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn literals_and_nesting_round_trip() {
        let text = "[parameters]\nx shear\n\n[edges]\ne = [1.5 -0.25, 0 0; 2e-20 1, 0.6666666666666666 0] * (A * S(x))\nf = inv(inv(B))\n\n[vertices]\nu = e> f> f< e<\n\n[paths]\np = +e -f @u\n";
        let doc = parse_graph(text).unwrap();
        assert!(matches!(doc.pair.jumps.jumps[0], JumpExpr::Prod(ref v) if matches!(v[1], JumpExpr::Prod(_))));
        roundtrip(&doc);
    }

    #[test]
    fn errors_carry_positions() {
        let cases = [
            ("[parameters]\nx shear\n[edges]\ne = S(y)\n", 4, 7),
            ("[parameters]\nx wobble\n", 2, 3),
            ("[edges]\ne = A\n[vertices]\nu = e> e\n", 4, 8),
            ("x shear\n", 1, 1),
            ("[parameters]\nx shear\n[edges]\ne = A *\n", 4, 8),
        ];
        for (text, line, col) in cases {
            match parse_graph(text) {
                Err(Error::Parse { line: l, col: c, .. }) => assert_eq!((l, c), (line, col), "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn decomposition_documents() {
        let text = "[pieces]\nt genus 1 boundaries 1\nh genus 1 boundaries 1\n[contours]\nc t:1 h:1\n";
        let d = parse_decomposition(text).unwrap();
        assert_eq!(d.spec, SurfaceSpec::separating(1, 1));
        let text = "[trinions]\nT1 = e1 e2 e3\nT2 = e1 e3 e2\n";
        let d = parse_decomposition(text).unwrap();
        assert_eq!(d.spec, TrinionGraph2::Theta.spec().unwrap());
        let text = "[pieces]\np genus 1 boundaries 2\n[contours]\nc p:1 p:2\n[triangulation p]\nface 1+ 2+ 4-\nface 4+ 1- 5-\nface 3+ 5+ 6-\nface 6+ 3- 2-\n";
        let d = parse_decomposition(text).unwrap();
        assert_eq!(d.triangulations[0], Triangulation::torus_two_vertex().unwrap());
        assert!(matches!(parse_document("[pieces]\np genus x boundaries 1\n"), Err(Error::Parse { line: 2, col: 9, .. })));
    }
}
