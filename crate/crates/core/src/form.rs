//! The canonical two-form of an admissible pair.
//!
//! At a vertex with outgoing jumps `J_1 … J_n` and partial products
//! `P_l = J_1 ⋯ J_l`,
//! `Ω_v(u, v) = ½ Σ_{l<n} tr(P_l⁻¹ D_u P_l · J_l⁻¹ D_v J_l) − (u ↔ v)`,
//! and `Ω = Σ_v Ω_v`. Wedges follow `(a∧b)(u,v) = a(u)b(v) − a(v)b(u)`.

use crate::coords::CoordinateSystem;
use crate::dd::Cdd;
use crate::error::{Error, Result};
use crate::graph::{AdmissiblePair, Evaluation, PathSpec};
use crate::jet::{Dual, Jet, Scalar, DIRS};
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;
use serde::Serialize;

/// Default admissibility tolerance for form evaluation.
pub const ADMISSIBLE_TOL: f64 = 1e-8;

const ZERO: C64 = C64::new(0.0, 0.0);

/// Jets are evaluated in double-double precision: partial products along
/// long vertex cycles grow large and the form is a difference of their
/// traces.
type J = Jet<Cdd>;

fn jet_point(values: &[C64], dirs: &[&[C64]]) -> Vec<J> {
    values
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let mut u = [Cdd::zero(); DIRS];
            for (d, dir) in dirs.iter().enumerate() {
                u[d] = Cdd::from(dir[k]);
            }
            Jet::exp_of(Cdd::from(*w), u)
        })
        .collect()
}

/// Directions carried by one first-order evaluation.
const CHUNK: usize = 4;

type D = Dual<Cdd, CHUNK>;

fn dual_point(values: &[C64], dirs: &[Vec<C64>]) -> Vec<D> {
    values
        .iter()
        .enumerate()
        .map(|(k, w)| {
            let mut u = [Cdd::zero(); CHUNK];
            for (d, dir) in dirs.iter().enumerate() {
                u[d] = Cdd::from(dir[k]);
            }
            Dual::exp_of(Cdd::from(*w), u)
        })
        .collect()
}

fn require_admissible<T: Scalar>(pair: &AdmissiblePair, ev: &Evaluation<T>, tol: f64) -> Result<()> {
    let plain = Evaluation {
        defs: ev.defs.iter().map(|m| m.value()).collect(),
        jumps: ev.jumps.iter().map(|m| m.value()).collect(),
        inv_jumps: ev.inv_jumps.iter().map(|m| m.value()).collect(),
    };
    let rep = pair.admissibility_of(&plain, tol);
    if !rep.admissible {
        return Err(Error::NotAdmissible(rep.max_residual));
    }
    Ok(())
}

fn derivative(m: &Mat2<J>, k: usize) -> Mat2<J> {
    m.map(|x| x.derivative(k))
}

/// `Ω(a, b)` as a jet: its value is the form on directions `a, b` and its
/// first derivatives are the derivatives of that value.
fn omega_jet(pair: &AdmissiblePair, ev: &Evaluation<J>, a: usize, b: usize) -> Jet {
    let mut total = J::zero();
    for v in 0..pair.graph.vertices.len() {
        let js = pair.vertex_jumps(ev, v);
        let mut p = Mat2::<J>::identity();
        for j in js.iter().take(js.len().saturating_sub(1)) {
            p = p * *j;
            let pi = p.inv();
            let ji = j.inv();
            let xa = pi * derivative(&p, a);
            let xb = pi * derivative(&p, b);
            let ya = ji * derivative(j, a);
            let yb = ji * derivative(j, b);
            total += (xa * yb).trace() - (xb * ya).trace();
        }
    }
    total.scale(Cdd::real(0.5)).to_c64()
}

/// `Ω(u, v)` at a point; `u, v` are log-direction vectors over the graph
/// parameters.
pub fn omega_eval(pair: &AdmissiblePair, point: &[C64], u: &[C64], v: &[C64]) -> Result<C64> {
    let m = omega_on(pair, point, &[u.to_vec(), v.to_vec()], vec!["u".into(), "v".into()])?;
    Ok(m.coeffs[0][1])
}

/// `D_u Ω(v,w) − D_v Ω(u,w) + D_w Ω(u,v)`.
pub fn closedness_residual(
    pair: &AdmissiblePair,
    point: &[C64],
    u: &[C64],
    v: &[C64],
    w: &[C64],
) -> Result<C64> {
    closedness_residual_unchecked(pair, point, u, v, w).and_then(|(r, adm)| {
        if adm > ADMISSIBLE_TOL {
            Err(Error::NotAdmissible(adm))
        } else {
            Ok(r)
        }
    })
}

/// Closedness residual together with the admissibility residual, without
/// refusing non-admissible pairs.
pub fn closedness_residual_unchecked(
    pair: &AdmissiblePair,
    point: &[C64],
    u: &[C64],
    v: &[C64],
    w: &[C64],
) -> Result<(C64, f64)> {
    let ev = pair.evaluate(&jet_point(point, &[u, v, w]))?;
    let adm = pair.validate_admissible(point, f64::INFINITY)?.max_residual;
    let r = omega_jet(pair, &ev, 1, 2).d1[0] - omega_jet(pair, &ev, 0, 2).d1[1]
        + omega_jet(pair, &ev, 0, 1).d1[2];
    Ok((r, adm))
}

/// Antisymmetric coefficient matrix of a two-form:
/// `Ω = Σ_{i<j} Ω_ij dx_i ∧ dx_j`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TwoFormMatrix {
    pub basis: Vec<String>,
    #[serde(serialize_with = "ser_matrix")]
    pub coeffs: Vec<Vec<C64>>,
}

fn ser_matrix<S: serde::Serializer>(m: &[Vec<C64>], s: S) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<Vec<[f64; 2]>> = m.iter().map(|r| r.iter().map(|z| [z.re, z.im]).collect()).collect();
    pairs.serialize(s)
}

impl TwoFormMatrix {
    pub fn zeros(basis: Vec<String>) -> TwoFormMatrix {
        let n = basis.len();
        TwoFormMatrix { basis, coeffs: vec![vec![ZERO; n]; n] }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    fn index(&self, name: &str) -> Result<usize> {
        self.basis
            .iter()
            .position(|b| b == name)
            .ok_or_else(|| Error::UnknownCoordinate(name.to_string()))
    }

    /// Adds `c · dx ∧ dy`.
    pub fn add_wedge(&mut self, x: &str, y: &str, c: f64) -> Result<()> {
        let (i, j) = (self.index(x)?, self.index(y)?);
        self.coeffs[i][j] += c;
        self.coeffs[j][i] -= c;
        Ok(())
    }

    pub fn get(&self, x: &str, y: &str) -> Result<C64> {
        Ok(self.coeffs[self.index(x)?][self.index(y)?])
    }

    pub fn max_dev(&self, other: &TwoFormMatrix) -> f64 {
        let mut worst: f64 = 0.0;
        for (r1, r2) in self.coeffs.iter().zip(&other.coeffs) {
            for (a, b) in r1.iter().zip(r2) {
                worst = worst.max((a - b).norm());
            }
        }
        if self.basis != other.basis {
            return f64::INFINITY;
        }
        worst
    }

    pub fn apply(&self, u: &[C64], v: &[C64]) -> C64 {
        let mut s = ZERO;
        for i in 0..self.dim() {
            for j in 0..self.dim() {
                s += self.coeffs[i][j] * u[i] * v[j];
            }
        }
        s
    }

    pub fn to_csv(&self) -> Result<String> {
        matrix_csv(&self.basis, &self.coeffs)
    }

    pub fn to_text(&self) -> String {
        matrix_text(&self.basis, &self.coeffs)
    }
}

pub(crate) fn fmt_c64(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn matrix_csv(basis: &[String], m: &[Vec<C64>]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Error::Point(e.to_string());
    let mut header = vec![String::new()];
    header.extend(basis.iter().cloned());
    w.write_record(&header).map_err(io)?;
    for (name, row) in basis.iter().zip(m) {
        let mut rec = vec![name.clone()];
        rec.extend(row.iter().map(|z| fmt_c64(clean(*z))));
        w.write_record(&rec).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Point(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn matrix_text(basis: &[String], m: &[Vec<C64>]) -> String {
    let width = basis.iter().map(|b| b.len()).max().unwrap_or(0).max(8);
    let mut out = format!("{:width$}", "");
    for b in basis {
        out.push_str(&format!(" {b:>width$}"));
    }
    out.push('\n');
    for (name, row) in basis.iter().zip(m) {
        out.push_str(&format!("{name:width$}"));
        for z in row {
            let z = clean(*z);
            let s = if z.im.abs() < 1e-9 { format!("{:.6}", z.re) } else { fmt_c64(z) };
            out.push_str(&format!(" {s:>width$}"));
        }
        out.push('\n');
    }
    out
}

/// Rounds entries within 1e-12 of an integer, for display only.
fn clean(z: C64) -> C64 {
    let r = |x: f64| if (x - x.round()).abs() < 1e-12 { x.round() + 0.0 } else { x };
    C64::new(r(z.re), r(z.im))
}

/// Per-direction derivative data at every vertex position.
struct Derivs {
    // [vertex position][direction] -> (P⁻¹ ∂P, J⁻¹ ∂J)
    slots: Vec<Vec<(Mat2<Cdd>, Mat2<Cdd>)>>,
}

fn collect_derivs(pair: &AdmissiblePair, point: &[C64], dirs: &[Vec<C64>]) -> Result<Derivs> {
    let mut slots: Vec<Vec<(Mat2<Cdd>, Mat2<Cdd>)>> = Vec::new();
    for (chunk_no, chunk) in dirs.chunks(CHUNK).enumerate() {
        let ev = pair.evaluate(&dual_point(point, chunk))?;
        if chunk_no == 0 {
            require_admissible(pair, &ev, ADMISSIBLE_TOL)?;
        }
        let mut slot = 0;
        for v in 0..pair.graph.vertices.len() {
            let js = pair.vertex_jumps(&ev, v);
            let mut p = Mat2::<D>::identity();
            for j in js.iter().take(js.len().saturating_sub(1)) {
                p = p * *j;
                let pi = p.map(|x| x.v).inv();
                let ji = j.map(|x| x.v).inv();
                if chunk_no == 0 {
                    slots.push(Vec::with_capacity(dirs.len()));
                }
                for k in 0..chunk.len() {
                    let dp = p.map(|x| x.d[k]);
                    let dj = j.map(|x| x.d[k]);
                    slots[slot].push((pi * dp, ji * dj));
                }
                slot += 1;
            }
        }
    }
    Ok(Derivs { slots })
}

/// Ω on an arbitrary list of parameter-space directions.
pub fn omega_on(pair: &AdmissiblePair, point: &[C64], dirs: &[Vec<C64>], basis: Vec<String>) -> Result<TwoFormMatrix> {
    let d = collect_derivs(pair, point, dirs)?;
    let n = dirs.len();
    let mut m = TwoFormMatrix::zeros(basis);
    for i in 0..n {
        for j in (i + 1)..n {
            let mut s = Cdd::zero();
            for slot in &d.slots {
                let (xi, yi) = &slot[i];
                let (xj, yj) = &slot[j];
                s += (*xi * *yj).trace() - (*xj * *yi).trace();
            }
            let s = (s * Cdd::real(0.5)).value();
            m.coeffs[i][j] = s;
            m.coeffs[j][i] = -s;
        }
    }
    Ok(m)
}

/// Ω pulled back to the free coordinates of a coordinate system.
pub fn omega_matrix(pair: &AdmissiblePair, point: &[C64], cs: &CoordinateSystem) -> Result<TwoFormMatrix> {
    let dirs: Vec<Vec<C64>> = (0..cs.dim()).map(|i| cs.basis_tangent(i)).collect();
    omega_on(pair, point, &dirs, cs.free.clone())
}

/// Pulls a form over every coordinate of a system back to its free basis.
pub fn pull_back(full: &TwoFormMatrix, cs: &CoordinateSystem) -> Result<TwoFormMatrix> {
    let names: Vec<&str> = cs.all_coords().map(|c| c.name.as_str()).collect();
    let rows: Vec<usize> = full
        .basis
        .iter()
        .map(|b| names.iter().position(|n| n == b).ok_or_else(|| Error::UnknownCoordinate(b.clone())))
        .collect::<Result<_>>()?;
    let n = cs.dim();
    let mut out = TwoFormMatrix::zeros(cs.free.clone());
    for a in 0..n {
        for b in 0..n {
            let mut s = ZERO;
            for (k, &rk) in rows.iter().enumerate() {
                for (l, &rl) in rows.iter().enumerate() {
                    s += full.coeffs[k][l] * (cs.lift[rk][a] * cs.lift[rl][b]);
                }
            }
            out.coeffs[a][b] = s;
        }
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PoissonMatrix {
    pub basis: Vec<String>,
    #[serde(serialize_with = "ser_matrix")]
    pub coeffs: Vec<Vec<C64>>,
    /// `‖Ω·P − I‖` max entry.
    pub residual: f64,
    /// `‖Ω‖·‖P‖` in the max-row-sum norm.
    pub condition: f64,
}

impl PoissonMatrix {
    pub fn to_csv(&self) -> Result<String> {
        matrix_csv(&self.basis, &self.coeffs)
    }

    pub fn to_text(&self) -> String {
        matrix_text(&self.basis, &self.coeffs)
    }
}

fn row_norm(m: &[Vec<C64>]) -> f64 {
    m.iter().map(|r| r.iter().map(|z| z.norm()).sum::<f64>()).fold(0.0, f64::max)
}

/// Inverse of the coefficient matrix by Gauss–Jordan elimination with
/// partial pivoting.
pub fn invert_to_poisson(form: &TwoFormMatrix) -> Result<PoissonMatrix> {
    let n = form.dim();
    if n % 2 == 1 {
        return Err(Error::DegenerateForm(format!("odd dimension {n}")));
    }
    let scale = form.coeffs.iter().flatten().map(|z| z.norm()).fold(0.0, f64::max);
    if scale == 0.0 && n > 0 {
        return Err(Error::DegenerateForm("zero form".into()));
    }
    let mut a = form.coeffs.clone();
    let mut inv: Vec<Vec<C64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { C64::new(1.0, 0.0) } else { ZERO }).collect())
        .collect();
    for col in 0..n {
        let piv = (col..n)
            .max_by(|&x, &y| a[x][col].norm().total_cmp(&a[y][col].norm()))
            .unwrap();
        if a[piv][col].norm() < 1e-10 * scale {
            return Err(Error::DegenerateForm(format!("rank deficient at column {}", form.basis[col])));
        }
        a.swap(col, piv);
        inv.swap(col, piv);
        let d = a[col][col];
        for k in 0..n {
            a[col][k] /= d;
            inv[col][k] /= d;
        }
        for r in 0..n {
            if r != col {
                let f = a[r][col];
                if f != ZERO {
                    for k in 0..n {
                        let (ak, ik) = (a[col][k], inv[col][k]);
                        a[r][k] -= f * ak;
                        inv[r][k] -= f * ik;
                    }
                }
            }
        }
    }
    let mut residual: f64 = 0.0;
    for i in 0..n {
        for j in 0..n {
            let s: C64 = (0..n).map(|k| form.coeffs[i][k] * inv[k][j]).sum();
            let target = if i == j { 1.0 } else { 0.0 };
            residual = residual.max((s - target).norm());
        }
    }
    let condition = row_norm(&form.coeffs) * row_norm(&inv);
    Ok(PoissonMatrix { basis: form.basis.clone(), coeffs: inv, residual, condition })
}

/// Gradient of `tr ρ(path)` in the free coordinates.
pub fn trace_gradient(
    pair: &AdmissiblePair,
    point: &[C64],
    cs: &CoordinateSystem,
    path: &PathSpec,
) -> Result<Vec<C64>> {
    let dirs: Vec<Vec<C64>> = (0..cs.dim()).map(|i| cs.basis_tangent(i)).collect();
    let mut grad = Vec::with_capacity(dirs.len());
    for chunk in dirs.chunks(CHUNK) {
        let ev = pair.evaluate(&dual_point(point, chunk))?;
        let t = pair.path_monodromy_of(path, &ev)?.trace();
        grad.extend(t.d[..chunk.len()].iter().map(|x| x.value()));
    }
    Ok(grad)
}

/// `{f, g} = Σ ∂_i f · P_ij · ∂_j g` for the trace functions of two loops.
pub fn bracket_trace_functions(
    pair: &AdmissiblePair,
    point: &[C64],
    cs: &CoordinateSystem,
    loop1: &PathSpec,
    loop2: &PathSpec,
) -> Result<C64> {
    let omega = omega_matrix(pair, point, cs)?;
    let p = invert_to_poisson(&omega)?;
    let gf = trace_gradient(pair, point, cs, loop1)?;
    let gg = trace_gradient(pair, point, cs, loop2)?;
    let mut s = ZERO;
    for i in 0..gf.len() {
        for j in 0..gg.len() {
            s += gf[i] * p.coeffs[i][j] * gg[j];
        }
    }
    Ok(s)
}

/// Plain trace of a loop's monodromy.
pub fn trace_of(pair: &AdmissiblePair, point: &[C64], path: &PathSpec) -> Result<C64> {
    Ok(pair.path_monodromy(path, point)?.trace())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_gamma2, Gamma2, SurfaceSpec};
    use crate::coords::Domain;
    use crate::specfmt::parse_graph;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn separating() -> Gamma2 {
        let spec = SurfaceSpec::separating(1, 1);
        build_gamma2(&spec, &spec.standard_triangulations().unwrap()).unwrap()
    }

    fn tangent(g2: &Gamma2, rng: &mut ChaCha8Rng) -> Vec<C64> {
        let t: Vec<C64> = (0..g2.coords.dim()).map(|_| C64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        g2.coords.lift_tangent(&t)
    }

    #[test]
    fn constant_jumps_give_zero() {
        let doc = parse_graph("[parameters]\nz shear\n[edges]\nx = A\ny = B * A\n[vertices]\nu = x> y> y< x<\n")
            .unwrap();
        let m = omega_matrix(&doc.pair, &[C64::new(1.3, 0.2)], &doc.coords).unwrap();
        assert_eq!(m.coeffs, vec![vec![ZERO]]);
    }

    #[test]
    fn first_order_path_matches_second_order_jets() {
        let g2 = separating();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..5 {
            let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
            let x = g2.coords.params_of(&p);
            let (u, v) = (tangent(&g2, &mut rng), tangent(&g2, &mut rng));
            let ev = g2.pair.evaluate(&jet_point(x, &[&u, &v])).unwrap();
            let second = omega_jet(&g2.pair, &ev, 0, 1).v;
            let first = omega_eval(&g2.pair, x, &u, &v).unwrap();
            assert!((first - second).norm() < 1e-12, "{first} vs {second}");
        }
    }

    #[test]
    fn cilium_rotation_keeps_the_form() {
        let g2 = separating();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
        let x = g2.coords.params_of(&p);
        let reference = omega_matrix(&g2.pair, x, &g2.coords).unwrap();
        for (v, vertex) in g2.pair.graph.vertices.iter().enumerate() {
            for k in 1..vertex.halves.len() {
                let rotated = g2.pair.rotate_cilium(v, k);
                let m = omega_matrix(&rotated, x, &g2.coords).unwrap();
                assert!(m.max_dev(&reference) < 1e-10, "vertex {} by {k}", vertex.name);
            }
        }
    }

    #[test]
    fn poisson_matrix_inverts_the_form() {
        let g2 = separating();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
        let omega = omega_matrix(&g2.pair, g2.coords.params_of(&p), &g2.coords).unwrap();
        let poisson = invert_to_poisson(&omega).unwrap();
        let n = omega.dim();
        for i in 0..n {
            for j in 0..n {
                let s: C64 = (0..n).map(|k| poisson.coeffs[i][k] * omega.coeffs[k][j]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((s - want).norm() < 1e-12);
                assert!((poisson.coeffs[i][j] + poisson.coeffs[j][i]).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn odd_or_zero_forms_do_not_invert() {
        let odd = TwoFormMatrix::zeros(vec!["a".into()]);
        assert!(matches!(invert_to_poisson(&odd), Err(Error::DegenerateForm(_))));
        let zero = TwoFormMatrix::zeros(vec!["a".into(), "b".into()]);
        assert!(matches!(invert_to_poisson(&zero), Err(Error::DegenerateForm(_))));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn omega_is_antisymmetric(seed in any::<u64>()) {
            let g2 = separating();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = g2.coords.sample(&mut rng, &Domain::default()).unwrap();
            let x = g2.coords.params_of(&p);
            let (u, v) = (tangent(&g2, &mut rng), tangent(&g2, &mut rng));
            let uv = omega_eval(&g2.pair, x, &u, &v).unwrap();
            let vu = omega_eval(&g2.pair, x, &v, &u).unwrap();
            prop_assert!((uv + vu).norm() < 1e-12);
        }
    }
}
