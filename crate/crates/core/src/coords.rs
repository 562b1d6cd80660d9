//! Log-linear constraint sets, free-coordinate elimination and sampling.
//!
//! Every coordinate is logarithmic: a shear `ζ = ln z`, a length
//! `ℓ = ln λ` or a toric `β = ln b`. Graph parameters are stored as their
//! exponentials; derived coordinates (lengths and glued toric variables)
//! exist only in the log-linear relations.

use crate::error::{Error, Result};
use crate::graph::{Coordinate, Role};
use num_complex::Complex64 as C64;
use rand::Rng;
use std::collections::HashMap;
use std::f64::consts::PI;

const COEF_EPS: f64 = 1e-12;

/// `Σ c_k x_k = offset`.
#[derive(Clone, Debug, PartialEq)]
pub struct Relation {
    pub terms: Vec<(String, f64)>,
    pub offset: C64,
    /// Names tried in order when picking the coordinate this relation eliminates.
    pub pivots: Vec<String>,
}

impl Relation {
    pub fn new(terms: Vec<(String, f64)>, offset: C64, pivots: Vec<String>) -> Relation {
        Relation { terms, offset, pivots }
    }

    /// `|∏ w_k^{c_k} / e^{offset} − 1|`, doubling exponents when some
    /// coefficient is a half-integer.
    pub fn multiplicative_residual(&self, values: &HashMap<String, C64>) -> Result<f64> {
        let integral = self.terms.iter().all(|(_, c)| c.fract() == 0.0);
        let k = if integral { 1.0 } else { 2.0 };
        let mut lhs = C64::new(1.0, 0.0);
        for (name, c) in &self.terms {
            let w = values.get(name).ok_or_else(|| Error::UnknownCoordinate(name.clone()))?;
            lhs *= w.powi((k * c).round() as i32);
        }
        let rhs = (self.offset * k).exp();
        Ok((lhs / rhs - 1.0).norm())
    }
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct ConstraintSet {
    pub relations: Vec<Relation>,
}

/// Coordinates of a graph together with their constraint relations.
#[derive(Clone, Debug, PartialEq)]
pub struct CoordinateSystem {
    /// Graph parameters, in the graph's order.
    pub params: Vec<Coordinate>,
    /// Coordinates that appear only in relations.
    pub derived: Vec<Coordinate>,
    pub constraints: ConstraintSet,
    /// Free coordinates in basis order.
    pub free: Vec<String>,
    /// Row per parameter then per derived coordinate: `x = lift · t + shift`.
    pub lift: Vec<Vec<f64>>,
    pub shift: Vec<C64>,
}

impl CoordinateSystem {
    /// Eliminates one coordinate per relation; `order` lists every
    /// coordinate and fixes the order of the free basis.
    pub fn new(
        params: Vec<Coordinate>,
        derived: Vec<Coordinate>,
        constraints: ConstraintSet,
        order: &[String],
    ) -> Result<CoordinateSystem> {
        let names: Vec<String> = params.iter().chain(&derived).map(|c| c.name.clone()).collect();
        let index: HashMap<&str, usize> =
            names.iter().enumerate().map(|(i, n)| (n.as_str(), i)).collect();
        if index.len() != names.len() {
            return Err(Error::Constraint("duplicate coordinate name".into()));
        }
        let n = names.len();
        let mut rows: Vec<(Vec<f64>, C64)> = Vec::new();
        let mut pivots: Vec<usize> = Vec::new();
        for rel in &constraints.relations {
            let mut row = vec![0.0; n];
            for (name, c) in &rel.terms {
                let k = *index.get(name.as_str()).ok_or_else(|| Error::UnknownCoordinate(name.clone()))?;
                row[k] += c;
            }
            let mut off = rel.offset;
            for (r, &p) in rows.iter().zip(&pivots) {
                let f = row[p];
                if f != 0.0 {
                    for k in 0..n {
                        row[k] -= f * r.0[k];
                    }
                    off -= r.1 * f;
                }
            }
            let mut pick = None;
            for cand in &rel.pivots {
                let k = *index.get(cand.as_str()).ok_or_else(|| Error::UnknownCoordinate(cand.clone()))?;
                if row[k].abs() > COEF_EPS && !pivots.contains(&k) {
                    pick = Some(k);
                    break;
                }
            }
            let p = pick.ok_or_else(|| {
                Error::Constraint(format!("relation on {:?} has no admissible pivot (rank deficient)", rel.pivots))
            })?;
            let s = row[p];
            row.iter_mut().for_each(|x| *x /= s);
            off /= s;
            for r in rows.iter_mut() {
                let f = r.0[p];
                if f != 0.0 {
                    for k in 0..n {
                        r.0[k] -= f * row[k];
                    }
                    r.1 -= off * f;
                }
            }
            rows.push((row, off));
            pivots.push(p);
        }
        let mut free = Vec::new();
        for name in order {
            let k = *index.get(name.as_str()).ok_or_else(|| Error::UnknownCoordinate(name.clone()))?;
            if !pivots.contains(&k) && !free.contains(name) {
                free.push(name.clone());
            }
        }
        if free.len() + pivots.len() != n {
            return Err(Error::Constraint("basis order does not cover every coordinate".into()));
        }
        let free_idx: Vec<usize> = free.iter().map(|f| index[f.as_str()]).collect();
        let mut lift = vec![vec![0.0; free.len()]; n];
        let mut shift = vec![C64::new(0.0, 0.0); n];
        for (j, &k) in free_idx.iter().enumerate() {
            lift[k][j] = 1.0;
        }
        for ((row, off), &p) in rows.iter().zip(&pivots) {
            for (j, &k) in free_idx.iter().enumerate() {
                lift[p][j] = -row[k];
            }
            shift[p] = *off;
        }
        Ok(CoordinateSystem { params, derived, constraints, free, lift, shift })
    }

    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn all_coords(&self) -> impl Iterator<Item = &Coordinate> {
        self.params.iter().chain(&self.derived)
    }

    pub fn role_of(&self, name: &str) -> Option<Role> {
        self.all_coords().find(|c| c.name == name).map(|c| c.role)
    }

    /// Log values of every coordinate from free log values.
    pub fn logs_from_free(&self, t: &[C64]) -> Vec<C64> {
        self.lift
            .iter()
            .zip(&self.shift)
            .map(|(row, s)| row.iter().zip(t).map(|(c, x)| x * c).sum::<C64>() + s)
            .collect()
    }

    /// Graph-parameter log direction of a free tangent vector.
    pub fn lift_tangent(&self, t: &[C64]) -> Vec<C64> {
        self.lift[..self.params.len()]
            .iter()
            .map(|row| row.iter().zip(t).map(|(c, x)| x * c).sum())
            .collect()
    }

    pub fn basis_tangent(&self, i: usize) -> Vec<C64> {
        let mut t = vec![C64::new(0.0, 0.0); self.dim()];
        t[i] = C64::new(1.0, 0.0);
        self.lift_tangent(&t)
    }

    /// Max over relations and free directions of `|Σ c_k ∂x_k|`.
    pub fn tangency_residual(&self) -> f64 {
        let index: HashMap<&str, usize> =
            self.all_coords().enumerate().map(|(i, c)| (c.name.as_str(), i)).collect();
        let mut worst: f64 = 0.0;
        for rel in &self.constraints.relations {
            for j in 0..self.dim() {
                let s: f64 = rel.terms.iter().map(|(n, c)| c * self.lift[index[n.as_str()]][j]).sum();
                worst = worst.max(s.abs());
            }
        }
        worst
    }

    pub fn point_from_free(&self, t: &[C64]) -> Point {
        let logs = self.logs_from_free(t);
        let values = logs.iter().map(|x| x.exp()).collect();
        Point { free: t.to_vec(), values }
    }

    /// Max multiplicative residual of the relations at a point.
    pub fn relation_residual(&self, p: &Point) -> Result<f64> {
        let values: HashMap<String, C64> =
            self.all_coords().map(|c| c.name.clone()).zip(p.values.iter().copied()).collect();
        let mut worst: f64 = 0.0;
        for r in &self.constraints.relations {
            worst = worst.max(r.multiplicative_residual(&values)?);
        }
        Ok(worst)
    }

    /// Samples free logs until every shear lies in the annulus
    /// `0.5 ≤ |z| ≤ 2` and every length has `|λ² − 1| ≥ 0.1`.
    pub fn sample<R: Rng>(&self, rng: &mut R, domain: &Domain) -> Result<Point> {
        for _ in 0..domain.max_attempts {
            let t: Vec<C64> = (0..self.dim()).map(|_| sample_log(rng, domain)).collect();
            let p = self.point_from_free(&t);
            if self.admitted(&p, domain) {
                return Ok(p);
            }
        }
        Err(Error::Sampling(format!("no admitted point in {} attempts", domain.max_attempts)))
    }

    pub fn admitted(&self, p: &Point, domain: &Domain) -> bool {
        self.all_coords().zip(&p.values).all(|(c, w)| match c.role {
            Role::Shear => {
                let r = w.norm();
                (domain.r_min..=domain.r_max).contains(&r)
            }
            Role::Length => (w * w - 1.0).norm() >= domain.lambda_gap,
            Role::Twist | Role::Toric => w.norm() > 1e-6 && w.norm() < 1e6,
        })
    }

    pub fn params_of<'a>(&self, p: &'a Point) -> &'a [C64] {
        &p.values[..self.params.len()]
    }

    /// Point from values bound to some coordinates. Free coordinates not
    /// bound are solved from the bound constrained ones; every binding must
    /// then agree with the point to relative `tol`.
    pub fn point_from_bindings(&self, bound: &HashMap<String, C64>, tol: f64) -> Result<Point> {
        let names: Vec<&str> = self.all_coords().map(|c| c.name.as_str()).collect();
        let mut logs: Vec<Option<C64>> = vec![None; names.len()];
        for (name, w) in bound {
            let k = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| Error::UnknownCoordinate(name.clone()))?;
            if w.norm() == 0.0 || !w.is_finite() {
                return Err(Error::Point(format!("`{name}` must be finite and nonzero")));
            }
            logs[k] = Some(w.ln());
        }
        let index = |f: &String| names.iter().position(|n| n == f).expect("free names are coordinates");
        let free_idx: Vec<usize> = self.free.iter().map(index).collect();
        let mut t: Vec<Option<C64>> = free_idx.iter().map(|&k| logs[k]).collect();
        let unknown: Vec<usize> = (0..t.len()).filter(|&j| t[j].is_none()).collect();
        if !unknown.is_empty() {
            // Rows over the unknown free logs from bound constrained coordinates.
            let mut rows: Vec<(Vec<f64>, C64)> = Vec::new();
            for (k, log) in logs.iter().enumerate() {
                let Some(log) = log else { continue };
                if free_idx.contains(&k) {
                    continue;
                }
                let mut rhs = log - self.shift[k];
                for (j, tj) in t.iter().enumerate() {
                    if let Some(x) = tj {
                        rhs -= x * self.lift[k][j];
                    }
                }
                rows.push((unknown.iter().map(|&j| self.lift[k][j]).collect(), rhs));
            }
            let sol = solve_rows(rows, unknown.len()).map_err(|col| {
                Error::Point(format!("`{}` is not determined by the bindings", self.free[unknown[col]]))
            })?;
            for (&j, x) in unknown.iter().zip(sol) {
                t[j] = Some(x);
            }
        }
        let t: Vec<C64> = t.into_iter().map(|x| x.expect("every free log is set")).collect();
        let p = self.point_from_free(&t);
        for (name, w) in bound {
            let k = names.iter().position(|n| n == name).expect("checked above");
            let dev = (p.values[k] / w - 1.0).norm();
            if dev > tol {
                return Err(Error::Point(format!(
                    "binding of `{name}` is inconsistent with the constraints (relative deviation {dev:.3e})"
                )));
            }
        }
        Ok(p)
    }
}

/// Solves `rows · x = rhs` for `n` unknowns by elimination with partial
/// pivoting; extra rows are ignored. Returns the first undetermined column.
fn solve_rows(mut rows: Vec<(Vec<f64>, C64)>, n: usize) -> std::result::Result<Vec<C64>, usize> {
    let mut order = Vec::with_capacity(n);
    for col in 0..n {
        let piv = (order.len()..rows.len())
            .max_by(|&a, &b| rows[a].0[col].abs().total_cmp(&rows[b].0[col].abs()))
            .filter(|&r| rows[r].0[col].abs() > COEF_EPS)
            .ok_or(col)?;
        rows.swap(order.len(), piv);
        let r = order.len();
        let (prow, prhs) = rows[r].clone();
        for (i, (row, rhs)) in rows.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[col] / prow[col];
            if f != 0.0 {
                for k in 0..n {
                    row[k] -= f * prow[k];
                }
                *rhs -= prhs * f;
            }
        }
        order.push(col);
    }
    Ok((0..n).map(|c| rows[c].1 / rows[c].0[c]).collect())
}

fn sample_log<R: Rng>(rng: &mut R, domain: &Domain) -> C64 {
    C64::new(rng.gen_range(domain.r_min.ln()..=domain.r_max.ln()), rng.gen_range(-PI..PI))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Domain {
    pub r_min: f64,
    pub r_max: f64,
    pub lambda_gap: f64,
    pub max_attempts: usize,
}

impl Default for Domain {
    fn default() -> Self {
        Domain { r_min: 0.5, r_max: 2.0, lambda_gap: 0.1, max_attempts: 100_000 }
    }
}

/// An admitted point: free log values and the exponentiated values of
/// every coordinate (parameters first, then derived).
#[derive(Clone, Debug, PartialEq)]
pub struct Point {
    pub free: Vec<C64>,
    pub values: Vec<C64>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn coord(n: &str, role: Role) -> Coordinate {
        Coordinate { name: n.into(), role }
    }

    // 2x + 2y − l = iπ, pivot x.
    fn small() -> CoordinateSystem {
        let rel = Relation::new(
            vec![("x".into(), 2.0), ("y".into(), 2.0), ("l".into(), -1.0)],
            C64::new(0.0, PI),
            vec!["x".into(), "y".into()],
        );
        CoordinateSystem::new(
            vec![coord("x", Role::Shear), coord("y", Role::Shear)],
            vec![coord("l", Role::Length)],
            ConstraintSet { relations: vec![rel] },
            &["x".into(), "y".into(), "l".into()],
        )
        .unwrap()
    }

    #[test]
    fn elimination_picks_first_candidate() {
        let cs = small();
        assert_eq!(cs.free, vec!["y".to_string(), "l".to_string()]);
        assert_eq!(cs.lift[0], vec![-1.0, 0.5]);
        assert!((cs.shift[0] - C64::new(0.0, PI / 2.0)).norm() < 1e-15);
        assert!(cs.tangency_residual() < 1e-14);
    }

    #[test]
    fn sampled_points_satisfy_relations_multiplicatively() {
        let cs = small();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let p = cs.sample(&mut rng, &Domain::default()).unwrap();
            assert!(cs.relation_residual(&p).unwrap() < 1e-13);
            // x² y² = −λ
            let (x, y, l) = (p.values[0], p.values[1], p.values[2]);
            assert!((x * x * y * y + l).norm() < 1e-12);
        }
    }

    #[test]
    fn bindings_solve_constrained_coordinates() {
        let cs = small();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = cs.sample(&mut rng, &Domain::default()).unwrap();
        let names = ["x", "y", "l"];
        let bind = |ks: &[usize]| -> HashMap<String, C64> { ks.iter().map(|&k| (names[k].to_string(), p.values[k])).collect() };
        for ks in [&[1, 2][..], &[0, 2], &[0, 1, 2]] {
            let q = cs.point_from_bindings(&bind(ks), 1e-12).unwrap();
            for k in 0..3 {
                assert!((q.values[k] - p.values[k]).norm() < 1e-12, "{ks:?}");
            }
        }
        assert!(matches!(cs.point_from_bindings(&bind(&[2]), 1e-12), Err(Error::Point(_))));
        let mut bad = bind(&[0, 1, 2]);
        bad.insert("l".into(), p.values[2] * 1.5);
        assert!(matches!(cs.point_from_bindings(&bad, 1e-12), Err(Error::Point(_))));
        bad.insert("q".into(), C64::new(1.0, 0.0));
        assert!(matches!(cs.point_from_bindings(&bad, 1e-12), Err(Error::UnknownCoordinate(_))));
    }

    #[test]
    fn dependent_relation_is_rank_deficient() {
        let r = |o: f64| Relation::new(vec![("x".into(), 1.0), ("y".into(), 1.0)], C64::new(o, 0.0), vec!["x".into(), "y".into()]);
        let err = CoordinateSystem::new(
            vec![coord("x", Role::Shear), coord("y", Role::Shear)],
            vec![],
            ConstraintSet { relations: vec![r(0.0), r(1.0)] },
            &["x".into(), "y".into()],
        );
        assert!(matches!(err, Err(Error::Constraint(_))));
    }
}
