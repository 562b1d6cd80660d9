//! Named verification scenarios with deterministic sampling and
//! pass/fail reports.
//!
//! Every check carries a bound. Check bounds scale with the scenario
//! tolerance `tol`: form targets use `tol`, coefficient variance `tol²`,
//! admissibility, relations and closedness `10·tol`, bracket ratios
//! `100·tol`, gluing relations `tol/100` and jet identities `tol/1000`.

use crate::builders::canonical::{commutator, eigen_diag, gluing_matrix, relation_residual};
use crate::dd::Cdd;
use crate::jet::Scalar;
use crate::builders::{
    build_gamma0, build_gamma2, gamma0_loops, glue_nonseparating, glue_separating, reduce_separating_torus_pair,
    toric_shift, Gamma2, Handle, PieceData, SurfaceSpec, Triangulation, TrinionGraph2, TwoBoundaryData,
};
use crate::coords::{CoordinateSystem, Domain, Point};
use crate::error::{Error, Result};
use crate::form::{
    bracket_trace_functions, closedness_residual, closedness_residual_unchecked, omega_eval, omega_matrix,
    trace_gradient, trace_of, TwoFormMatrix,
};
use crate::graph::{AdmissiblePair, JumpExpr, PathSpec};
use crate::jet::Jet;
use crate::mat2::Mat2;
use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::hash_map::DefaultHasher;
use std::fmt::Write;
use std::hash::Hasher;
use std::time::Instant;

/// Orientation sign of a single transverse intersection in the bracket of
/// trace functions, calibrated once against `{tr M_α₁, tr M_β₁}`.
pub const GOLDMAN_NU: f64 = 1.0;

/// Threshold the broken-pair closedness residual must exceed.
pub const BROKEN_CLOSEDNESS_MIN: f64 = 1e-3;

const TANGENT_PAIRS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Options {
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
}

impl Default for Options {
    fn default() -> Self {
        Options { seed: 42, samples: 50, tol: 1e-9 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    /// Passes when the residual is below the bound.
    Below,
    /// Passes when the residual exceeds the bound.
    Above,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub residual: f64,
    pub bound: f64,
    pub direction: Direction,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, residual: f64, bound: f64) -> Check {
        Check { name: name.into(), residual, bound, direction: Direction::Below, passed: residual < bound }
    }

    fn above(name: impl Into<String>, residual: f64, bound: f64) -> Check {
        Check { name: name.into(), residual, bound, direction: Direction::Above, passed: residual > bound }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub description: String,
    /// Negative controls are expected to fail.
    pub negative: bool,
    pub seed: u64,
    pub samples: usize,
    pub tol: f64,
    pub checks: Vec<Check>,
    pub error: Option<String>,
    pub passed: bool,
    pub wall_time_ms: f64,
    /// Hash of the sampled points and residuals.
    pub digest: String,
}

impl Report {
    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .filter(|c| c.direction == Direction::Below)
            .map(|c| c.residual)
            .fold(0.0, f64::max)
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        let _ = writeln!(s, "{verdict} {} (seed {}, samples {}, tol {:e})", self.scenario, self.seed, self.samples, self.tol);
        let _ = writeln!(s, "  {}", self.description);
        for c in &self.checks {
            let (mark, op) = match (c.passed, c.direction) {
                (true, Direction::Below) => ("ok ", "<"),
                (true, Direction::Above) => ("ok ", ">"),
                (false, Direction::Below) => ("BAD", "<"),
                (false, Direction::Above) => ("BAD", ">"),
            };
            let _ = writeln!(s, "  {mark} {:<40} {:.3e} {op} {:.1e}", c.name, c.residual, c.bound);
        }
        if let Some(e) = &self.error {
            let _ = writeln!(s, "  error: {e}");
        }
        let _ = writeln!(s, "  max deviation {:.3e}, digest {}, {:.1} ms", self.max_residual(), self.digest, self.wall_time_ms);
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Kind {
    Separating,
    Nonseparating,
    TwoContour,
    Trinion(TrinionGraph2),
    Multicontour(usize),
    Moves,
    Closedness,
    Goldman,
    Relabel,
    Glue,
    DerivativeOracle,
    BrokenAdmissibility,
    MismatchedLambda,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScenarioInfo {
    pub name: &'static str,
    pub description: &'static str,
    pub negative: bool,
    kind: Kind,
}

const fn info(name: &'static str, description: &'static str, kind: Kind) -> ScenarioInfo {
    ScenarioInfo { name, description, negative: false, kind }
}

const CATALOG: [ScenarioInfo; 19] = [
    info("sep-g2", "genus 2 cut along one separating contour into two one-holed tori", Kind::Separating),
    info("nonsep-g2", "genus 2 cut along one non-separating contour, two-vertex torus piece", Kind::Nonseparating),
    info("two-contour-g2", "genus 2 cut into a one-holed torus and a trinion", Kind::TwoContour),
    info("trinion-g2-theta", "genus 2 trinion decomposition, theta graph", Kind::Trinion(TrinionGraph2::Theta)),
    info(
        "trinion-g2-theta-prime",
        "genus 2 trinion decomposition, theta graph with one reversed vertex",
        Kind::Trinion(TrinionGraph2::ThetaPrime),
    ),
    info("trinion-g2-dumbbell", "genus 2 trinion decomposition, dumbbell graph", Kind::Trinion(TrinionGraph2::Dumbbell)),
    info("multicontour-g3-m1", "genus 3 with one contour", Kind::Multicontour(1)),
    info("multicontour-g3-m2", "genus 3 with two contours", Kind::Multicontour(2)),
    info("multicontour-g3-m3", "genus 3 with three contours", Kind::Multicontour(3)),
    info("multicontour-g3-m4", "genus 3 with four contours", Kind::Multicontour(4)),
    info("multicontour-g3", "genus 3 with one to four contours", Kind::Multicontour(0)),
    info("moves-invariance-g2", "Ω along the reduction to the canonical graph", Kind::Moves),
    info("closedness-g2", "dΩ on the decomposition and canonical graphs, with a broken control", Kind::Closedness),
    info("goldman-bracket-g2", "trace-function brackets from the inverted form", Kind::Goldman),
    info("trinion-relabel", "toric shift under reversed cyclic order and the relabelled theta form", Kind::Relabel),
    info("glue-roundtrip", "separating and non-separating gluing of piece monodromies", Kind::Glue),
    info("derivative-oracle-g2", "jet derivatives against central differences", Kind::DerivativeOracle),
    ScenarioInfo {
        name: "neg-broken-admissibility",
        description: "separating genus 2 with one jump perturbed off the admissible locus",
        negative: true,
        kind: Kind::BrokenAdmissibility,
    },
    ScenarioInfo {
        name: "neg-mismatched-lambda",
        description: "separating gluing of pieces whose boundary eigenvalues differ",
        negative: true,
        kind: Kind::MismatchedLambda,
    },
];

/// The scenario catalog in stable order.
pub fn list_scenarios() -> &'static [ScenarioInfo] {
    &CATALOG
}

fn lookup(name: &str) -> Result<&'static ScenarioInfo> {
    CATALOG.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario(name.to_string()))
}

struct Ctx {
    opts: Options,
    rng: ChaCha8Rng,
    hasher: DefaultHasher,
    checks: Vec<Check>,
}

impl Ctx {
    fn hash_c64(&mut self, z: C64) {
        self.hasher.write_u64(z.re.to_bits());
        self.hasher.write_u64(z.im.to_bits());
    }

    fn sample(&mut self, cs: &CoordinateSystem) -> Result<Point> {
        let p = cs.sample(&mut self.rng, &Domain::default())?;
        for &z in &p.free {
            self.hash_c64(z);
        }
        Ok(p)
    }

    fn unit(&mut self) -> C64 {
        let z = C64::new(self.rng.gen_range(-1.0..1.0), self.rng.gen_range(-1.0..1.0));
        self.hash_c64(z);
        z
    }

    fn tangent(&mut self, cs: &CoordinateSystem) -> Vec<C64> {
        let t: Vec<C64> = (0..cs.dim()).map(|_| self.unit()).collect();
        cs.lift_tangent(&t)
    }

    fn below(&mut self, name: impl Into<String>, residual: f64, bound: f64) {
        self.checks.push(Check::below(name, residual, bound));
    }

    fn above(&mut self, name: impl Into<String>, residual: f64, bound: f64) {
        self.checks.push(Check::above(name, residual, bound));
    }
}

/// Runs one scenario. Unknown names are errors; failures while building or
/// sampling are recorded in the report.
pub fn run_scenario(name: &str, opts: &Options) -> Result<Report> {
    let info = lookup(name)?;
    let start = Instant::now();
    let mut ctx = Ctx {
        opts: *opts,
        rng: ChaCha8Rng::seed_from_u64(opts.seed),
        hasher: DefaultHasher::new(),
        checks: Vec::new(),
    };
    ctx.hasher.write(name.as_bytes());
    let outcome = dispatch(info.kind, &mut ctx);
    for c in &ctx.checks {
        ctx.hasher.write_u64(c.residual.to_bits());
    }
    let error = outcome.err().map(|e| e.to_string());
    let passed = error.is_none() && !ctx.checks.is_empty() && ctx.checks.iter().all(|c| c.passed);
    Ok(Report {
        scenario: name.to_string(),
        description: info.description.to_string(),
        negative: info.negative,
        seed: opts.seed,
        samples: opts.samples,
        tol: opts.tol,
        checks: ctx.checks,
        error,
        passed,
        wall_time_ms: start.elapsed().as_secs_f64() * 1e3,
        digest: format!("{:016x}", ctx.hasher.finish()),
    })
}

/// Runs several scenarios on parallel threads; reports keep input order.
pub fn run_many(names: &[&str], opts: &Options) -> Result<Vec<Report>> {
    for n in names {
        lookup(n)?;
    }
    std::thread::scope(|s| {
        let handles: Vec<_> = names.iter().map(|n| s.spawn(move || run_scenario(n, opts))).collect();
        handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
    })
}

/// Every non-negative scenario.
pub fn run_all(opts: &Options) -> Result<Vec<Report>> {
    let names: Vec<&str> = CATALOG.iter().filter(|s| !s.negative).map(|s| s.name).collect();
    run_many(&names, opts)
}

fn dispatch(kind: Kind, ctx: &mut Ctx) -> Result<()> {
    match kind {
        Kind::Separating => {
            let g2 = separating_g2()?;
            formula_scenario(ctx, &g2.pair, &g2.coords, &separating_target(), Some(&g2))
        }
        Kind::Nonseparating => {
            let spec = SurfaceSpec::nonseparating(2);
            let g2 = build_gamma2(&spec, &[Triangulation::torus_two_vertex()?])?;
            formula_scenario(ctx, &g2.pair, &g2.coords, &g2.formula_target()?, None)
        }
        Kind::TwoContour => {
            let g2 = standard(&SurfaceSpec::two_contour_genus2())?;
            formula_scenario(ctx, &g2.pair, &g2.coords, &two_contour_target(), Some(&g2))
        }
        Kind::Trinion(g) => {
            let g2 = standard(&g.spec()?)?;
            formula_scenario(ctx, &g2.pair, &g2.coords, &trinion_target(g), Some(&g2))
        }
        Kind::Multicontour(0) => {
            for m in 1..=4 {
                let g2 = standard(&SurfaceSpec::multicontour_genus3(m)?)?;
                let before = ctx.checks.len();
                formula_scenario(ctx, &g2.pair, &g2.coords, &g2.formula_target()?, None)?;
                for c in &mut ctx.checks[before..] {
                    c.name = format!("m{m} {}", c.name);
                }
            }
            Ok(())
        }
        Kind::Multicontour(m) => {
            let g2 = standard(&SurfaceSpec::multicontour_genus3(m)?)?;
            formula_scenario(ctx, &g2.pair, &g2.coords, &g2.formula_target()?, None)
        }
        Kind::Moves => moves_scenario(ctx),
        Kind::Closedness => closedness_scenario(ctx),
        Kind::Goldman => goldman_scenario(ctx),
        Kind::Relabel => relabel_scenario(ctx),
        Kind::Glue => glue_scenario(ctx, false),
        Kind::DerivativeOracle => derivative_scenario(ctx),
        Kind::BrokenAdmissibility => {
            let g2 = separating_g2()?;
            formula_scenario(ctx, &broken_pair(&g2.pair), &g2.coords, &separating_target(), None)
        }
        Kind::MismatchedLambda => glue_scenario(ctx, true),
    }
}

fn standard(spec: &SurfaceSpec) -> Result<Gamma2> {
    build_gamma2(spec, &spec.standard_triangulations()?)
}

fn separating_g2() -> Result<Gamma2> {
    standard(&SurfaceSpec::separating(1, 1))
}

/// The pair with its first jump multiplied by a constant unipotent.
pub fn broken_pair(pair: &AdmissiblePair) -> AdmissiblePair {
    let mut bp = pair.clone();
    let kick = JumpExpr::Lit(Mat2::from_real(1.0, 0.3, 0.0, 1.0));
    bp.jumps.jumps[0] = JumpExpr::prod(vec![bp.jumps.jumps[0].clone(), kick]);
    bp
}

fn form(basis: &[&str], wedges: &[(&str, &str, f64)]) -> TwoFormMatrix {
    let mut m = TwoFormMatrix::zeros(basis.iter().map(|s| s.to_string()).collect());
    for (x, y, c) in wedges {
        m.add_wedge(x, y, *c).expect("target names belong to the basis");
    }
    m
}

/// `2dζ̃₂∧dζ̃₃ + 2dζ̂₂∧dζ̂₃ + dℓ∧(dζ̃₂+dζ̃₃) + dℓ∧(dζ̂₂+dζ̂₃) + dβ∧dℓ`.
pub fn separating_target() -> TwoFormMatrix {
    form(
        &["z_t_2", "z_t_3", "z_h_2", "z_h_3", "l_c", "beta_c"],
        &[
            ("z_t_2", "z_t_3", 2.0),
            ("z_h_2", "z_h_3", 2.0),
            ("l_c", "z_t_2", 1.0),
            ("l_c", "z_t_3", 1.0),
            ("l_c", "z_h_2", 1.0),
            ("l_c", "z_h_3", 1.0),
            ("beta_c", "l_c", 1.0),
        ],
    )
}

/// `2dζ̃₂∧dζ̃₃ + dℓ₁∧(dζ̃₂+dζ̃₃) + dβ₁∧dℓ₁ + dβ₂∧dℓ₂`.
pub fn two_contour_target() -> TwoFormMatrix {
    form(
        &["z_t_2", "z_t_3", "l_c1", "l_c2", "beta_c1", "beta_c2"],
        &[
            ("z_t_2", "z_t_3", 2.0),
            ("l_c1", "z_t_2", 1.0),
            ("l_c1", "z_t_3", 1.0),
            ("beta_c1", "l_c1", 1.0),
            ("beta_c2", "l_c2", 1.0),
        ],
    )
}

/// `Σ dβ∧dℓ`, plus `2[dℓ₃∧dℓ₂ + dℓ₁∧dℓ₃ + dℓ₂∧dℓ₁]` for the reversed theta.
pub fn trinion_target(g: TrinionGraph2) -> TwoFormMatrix {
    let basis = ["l_e1", "l_e2", "l_e3", "beta_e1", "beta_e2", "beta_e3"];
    let mut w = vec![("beta_e1", "l_e1", 1.0), ("beta_e2", "l_e2", 1.0), ("beta_e3", "l_e3", 1.0)];
    if g == TrinionGraph2::ThetaPrime {
        w.extend([("l_e3", "l_e2", 2.0), ("l_e1", "l_e3", 2.0), ("l_e2", "l_e1", 2.0)]);
    }
    form(&basis, &w)
}

fn max_variance(samples: &[TwoFormMatrix]) -> f64 {
    let Some(first) = samples.first() else { return 0.0 };
    let n = samples.len() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..first.dim() {
        for j in 0..first.dim() {
            let mean: C64 = samples.iter().map(|m| m.coeffs[i][j]).sum::<C64>() / n;
            let var = samples.iter().map(|m| (m.coeffs[i][j] - mean).norm_sqr()).sum::<f64>() / n;
            worst = worst.max(var);
        }
    }
    worst
}

fn formula_scenario(
    ctx: &mut Ctx,
    pair: &AdmissiblePair,
    cs: &CoordinateSystem,
    target: &TwoFormMatrix,
    closed_form: Option<&Gamma2>,
) -> Result<()> {
    let tol = ctx.opts.tol;
    if let Some(g2) = closed_form {
        ctx.below("closed-form formula vs target", g2.formula_target()?.max_dev(target), tol);
    }
    let (mut adm, mut rel, mut dev) = (0.0f64, 0.0f64, 0.0f64);
    let mut forms = Vec::new();
    for _ in 0..ctx.opts.samples {
        let p = ctx.sample(cs)?;
        let x = cs.params_of(&p);
        adm = adm.max(pair.validate_admissible(x, f64::INFINITY)?.max_residual);
        rel = rel.max(cs.relation_residual(&p)?);
        match omega_matrix(pair, x, cs) {
            Ok(om) => {
                dev = dev.max(om.max_dev(target));
                forms.push(om);
            }
            Err(_) => dev = f64::INFINITY,
        }
    }
    ctx.below("admissibility", adm, 10.0 * tol);
    ctx.below("coordinate relations", rel, 10.0 * tol);
    ctx.below("Ω vs target", dev, tol);
    ctx.below("coefficient variance", max_variance(&forms), tol * tol);
    Ok(())
}

fn moves_scenario(ctx: &mut Ctx) -> Result<()> {
    let tol = ctx.opts.tol;
    let g2 = separating_g2()?;
    let steps = reduce_separating_torus_pair(&g2)?;
    let mut worst = vec![0.0f64; steps.len()];
    let mut adm = 0.0f64;
    for _ in 0..ctx.opts.samples {
        let p = ctx.sample(&g2.coords)?;
        let x = g2.coords.params_of(&p).to_vec();
        for _ in 0..TANGENT_PAIRS {
            let (u, v) = (ctx.tangent(&g2.coords), ctx.tangent(&g2.coords));
            let reference = omega_eval(&g2.pair, &x, &u, &v)?;
            for (k, s) in steps.iter().enumerate() {
                let w = omega_eval(&s.pair, &x, &u, &v)?;
                worst[k] = worst[k].max((w - reference).norm() / reference.norm().max(1.0));
            }
        }
        for s in &steps {
            adm = adm.max(s.pair.validate_admissible(&x, f64::INFINITY)?.max_residual);
        }
    }
    ctx.below("admissibility of every step", adm, 10.0 * tol);
    for (k, s) in steps.iter().enumerate().skip(1) {
        let tag = if s.literal { "" } else { " (substitution)" };
        ctx.below(format!("step {k}: {}{tag}", s.label), worst[k], tol);
    }
    Ok(())
}

fn closedness_scenario(ctx: &mut Ctx) -> Result<()> {
    let tol = ctx.opts.tol;
    let g2 = separating_g2()?;
    let steps = reduce_separating_torus_pair(&g2)?;
    let g0 = &steps.last().expect("reduction yields steps").pair;
    let broken = broken_pair(&g2.pair);
    let (mut r2, mut r0, mut rb) = (0.0f64, 0.0f64, f64::INFINITY);
    for _ in 0..ctx.opts.samples {
        let p = ctx.sample(&g2.coords)?;
        let x = g2.coords.params_of(&p);
        let (u, v, w) = (ctx.tangent(&g2.coords), ctx.tangent(&g2.coords), ctx.tangent(&g2.coords));
        r2 = r2.max(closedness_residual(&g2.pair, x, &u, &v, &w)?.norm());
        r0 = r0.max(closedness_residual(g0, x, &u, &v, &w)?.norm());
        rb = rb.min(closedness_residual_unchecked(&broken, x, &u, &v, &w)?.0.norm());
    }
    ctx.below("dΩ on the decomposition graph", r2, 10.0 * tol);
    ctx.below("dΩ on the canonical graph", r0, 10.0 * tol);
    ctx.above("dΩ on the broken pair (min)", rb, BROKEN_CLOSEDNESS_MIN);
    Ok(())
}

/// `ν (tr M_a M_b − ½ tr M_a tr M_b)` for loops meeting once.
pub fn goldman_rhs(ma: &Mat2<C64>, mb: &Mat2<C64>) -> C64 {
    ((*ma * *mb).trace() - ma.trace() * mb.trace() * 0.5) * GOLDMAN_NU
}

fn goldman_scenario(ctx: &mut Ctx) -> Result<()> {
    let tol = ctx.opts.tol;
    let g2 = separating_g2()?;
    let steps = reduce_separating_torus_pair(&g2)?;
    let g0 = &steps.last().expect("reduction yields steps").pair;
    let loops = gamma0_loops(g0)?;
    let cs = &g2.coords;
    let mut rel = [0.0f64; 2];
    let mut disjoint = 0.0f64;
    for _ in 0..ctx.opts.samples {
        let p = ctx.sample(cs)?;
        let x = cs.params_of(&p);
        for (h, (a, b)) in loops.iter().enumerate() {
            let br = bracket_trace_functions(g0, x, cs, a, b)?;
            let rhs = goldman_rhs(&g0.path_monodromy(a, x)?, &g0.path_monodromy(b, x)?);
            rel[h] = rel[h].max((br - rhs).norm() / rhs.norm().max(1e-300));
        }
        let (a1, b1) = &loops[0];
        let (a2, b2) = &loops[1];
        for (f, g) in [(a1, a2), (a1, b2), (b1, a2), (b1, b2)] {
            disjoint = disjoint.max(bracket_trace_functions(g0, x, cs, f, g)?.norm());
        }
    }
    ctx.below("{tr α₁, tr β₁} relative", rel[0], 100.0 * tol);
    ctx.below("{tr α₂, tr β₂} relative", rel[1], 100.0 * tol);
    ctx.below("disjoint-loop brackets", disjoint, tol);
    Ok(())
}

/// `Σ dβ̃ⱼ∧dℓ̃ⱼ − Σ dℓₐ∧dℓₐ₊₁ − Σ dβⱼ∧dℓⱼ` evaluated on two directions
/// carried by jets.
pub fn shift_identity_residual(beta: [Jet; 3], ell: [Jet; 3]) -> f64 {
    let (bt, lt) = toric_shift(beta, ell);
    let w = |x: &Jet, y: &Jet| x.d1[0] * y.d1[1] - x.d1[1] * y.d1[0];
    let lhs: C64 = (0..3).map(|j| w(&bt[j], &lt[j])).sum();
    let rhs: C64 = (0..3).map(|a| w(&ell[a], &ell[(a + 1) % 3]) + w(&beta[a], &ell[a])).sum();
    (lhs - rhs).norm()
}

/// Jacobian of `ℓ′ = ℓ`, `β′ⱼ = βⱼ + (ℓⱼ₋₁ − ℓⱼ − ℓⱼ₊₁)` in the basis
/// `(ℓ₁, ℓ₂, ℓ₃, β₁, β₂, β₃)`, indices cyclic.
pub fn relabel_jacobian() -> [[f64; 6]; 6] {
    let mut j = [[0.0; 6]; 6];
    for (k, row) in j.iter_mut().enumerate() {
        row[k] = 1.0;
    }
    for a in 0..3 {
        j[3 + a][(a + 2) % 3] += 1.0;
        j[3 + a][a] -= 1.0;
        j[3 + a][(a + 1) % 3] -= 1.0;
    }
    j
}

/// `Jᵀ Ω J`.
pub fn pull_back_linear(om: &TwoFormMatrix, jac: &[[f64; 6]; 6], basis: Vec<String>) -> TwoFormMatrix {
    let mut out = TwoFormMatrix::zeros(basis);
    for a in 0..6 {
        for b in 0..6 {
            let mut s = C64::new(0.0, 0.0);
            for k in 0..6 {
                for l in 0..6 {
                    s += om.coeffs[k][l] * (jac[k][a] * jac[l][b]);
                }
            }
            out.coeffs[a][b] = s;
        }
    }
    out
}

fn relabel_scenario(ctx: &mut Ctx) -> Result<()> {
    let tol = ctx.opts.tol;
    let mut shift = 0.0f64;
    for _ in 0..ctx.opts.samples {
        let mut mk = || {
            let x0 = ctx.unit();
            Jet::affine(x0, [ctx.unit(), ctx.unit(), C64::new(0.0, 0.0)])
        };
        let beta = [mk(), mk(), mk()];
        let ell = [mk(), mk(), mk()];
        shift = shift.max(shift_identity_residual(beta, ell));
    }
    ctx.below("toric shift identity on jets", shift, tol / 1000.0);

    let theta = standard(&TrinionGraph2::Theta.spec()?)?;
    let prime = standard(&TrinionGraph2::ThetaPrime.spec()?)?;
    let jac = relabel_jacobian();
    let (mut dev, mut exact) = (0.0f64, 0.0f64);
    let exact_back = pull_back_linear(&trinion_target(TrinionGraph2::ThetaPrime), &jac, theta.coords.free.clone());
    exact = exact.max(exact_back.max_dev(&trinion_target(TrinionGraph2::Theta)));
    for _ in 0..ctx.opts.samples {
        let p = ctx.sample(&theta.coords)?;
        let om = omega_matrix(&theta.pair, theta.coords.params_of(&p), &theta.coords)?;
        let q = ctx.sample(&prime.coords)?;
        let om_prime = omega_matrix(&prime.pair, prime.coords.params_of(&q), &prime.coords)?;
        dev = dev.max(pull_back_linear(&om_prime, &jac, theta.coords.free.clone()).max_dev(&om));
    }
    ctx.below("exact reversed form pulled back", exact, tol);
    ctx.below("numeric reversed form pulled back", dev, tol);
    Ok(())
}

fn sl2<T: Scalar>(rng: &mut ChaCha8Rng) -> Mat2<T> {
    let a = C64::from_polar(rng.gen_range(0.7..1.4), rng.gen_range(-3.0..3.0));
    let mut c = || C64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
    let (b, cc) = (T::from_c64(c()), T::from_c64(c()));
    let a = T::from_c64(a);
    Mat2::new(a, b, cc, (T::one() + b * cc) / a)
}

/// Frame `C` with `C diag(−λ, −1/λ) C⁻¹ = m`, assuming those eigenvalues.
/// Columns are balanced to equal length.
pub fn eigen_frame<T: Scalar>(m: &Mat2<T>, lambda: T) -> Result<Mat2<T>> {
    let size = |x: T, y: T| x.value().norm() + y.value().norm();
    let col = |mu: T| -> Result<(T, T)> {
        let (x1, y1) = (m.b, mu - m.a);
        let (x2, y2) = (mu - m.d, m.c);
        let (x, y) = if size(x1, y1) >= size(x2, y2) { (x1, y1) } else { (x2, y2) };
        if size(x, y) < 1e-12 {
            return Err(Error::Degenerate);
        }
        let n = T::real((x.value().norm_sqr() + y.value().norm_sqr()).sqrt());
        Ok((x / n, y / n))
    };
    let (a, c) = col(-lambda)?;
    let (b, d) = col(-lambda.recip())?;
    let det = a * d - b * c;
    if det.value().norm() < 1e-12 {
        return Err(Error::Degenerate);
    }
    let s = det.sqrt();
    Ok(Mat2::new(a / s, b / s, c / s, d / s))
}

/// `λ` with `−λ` an eigenvalue of `m`; picks `|λ| ≥ 1`.
fn boundary_lambda<T: Scalar>(m: &Mat2<T>) -> T {
    let t = m.trace();
    let half = T::real(0.5);
    let disc = (t * t - T::real(4.0)).sqrt();
    let mu = (t + disc) * half;
    let mu = if mu.value().norm() >= 1.0 { mu } else { (t - disc) * half };
    -mu
}

/// A one-holed torus `(A, B)` whose commutator has trace `kappa`.
fn torus_with_trace<T: Scalar>(rng: &mut ChaCha8Rng, kappa: T) -> Handle<T> {
    let x = T::from_c64(C64::new(rng.gen_range(1.5..3.0), rng.gen_range(-0.5..0.5)));
    let y = T::from_c64(C64::new(rng.gen_range(1.5..3.0), rng.gen_range(-0.5..0.5)));
    let (half, two, four) = (T::real(0.5), T::real(2.0), T::real(4.0));
    // z² − xyz + (x² + y² − 2 − κ) = 0
    let (p, q) = (-(x * y), x * x + y * y - two - kappa);
    let disc = (p * p - four * q).sqrt();
    let (z1, z2) = ((-p + disc) * half, (-p - disc) * half);
    // The smaller root keeps the matrices well conditioned.
    let z = if z1.value().norm() <= z2.value().norm() { z1 } else { z2 };
    // s² + zs + 1 = 0 makes tr(AB) = −(s + 1/s) = z.
    let s = (-z + (z * z - four).sqrt()) * half;
    let (one, zero) = (T::one(), T::zero());
    let a = Mat2::new(x, one, -one, zero);
    let b = Mat2::new(zero, s, -s.recip(), y);
    let g = sl2::<T>(rng);
    let gi = g.inv();
    (g * a * gi, g * b * gi)
}

fn one_holed_piece<T: Scalar>(rng: &mut ChaCha8Rng, kappa: Option<T>) -> Result<PieceData<T>> {
    let (a, b) = match kappa {
        Some(k) => torus_with_trace(rng, k),
        None => (sl2(rng), sl2(rng)),
    };
    let boundary = commutator(&a, &b).inv();
    let lambda = boundary_lambda(&boundary);
    Ok(PieceData { handles: vec![(a, b)], frame: eigen_frame(&boundary, lambda)?, lambda })
}

fn two_holed_piece<T: Scalar>(rng: &mut ChaCha8Rng) -> Result<TwoBoundaryData<T>> {
    for _ in 0..1000 {
        let (a, b) = (sl2::<T>(rng), sl2::<T>(rng));
        let kinv = commutator(&a, &b).inv();
        let c1 = sl2::<T>(rng);
        let n = c1.inv() * kinv * c1;
        // tr(P₁⁻¹K⁻¹) = −(λ + 1/λ) fixes λ² = (1 − n₁₁)/(n₂₂ − 1).
        let lambda = ((T::one() - n.a) / (n.d - T::one())).sqrt();
        let l = lambda.value();
        if !l.is_finite() || (l * l - 1.0).norm() < 0.1 {
            continue;
        }
        let p1 = c1 * eigen_diag(lambda) * c1.inv();
        let p2 = p1.inv() * kinv;
        let c2 = eigen_frame(&p2, lambda)?;
        return Ok(TwoBoundaryData { handles: vec![(a, b)], frames: [c1, c2], lambda });
    }
    Err(Error::Sampling("no non-degenerate two-holed piece".into()))
}

fn handles_roundtrip(handles: &[Handle], tol: f64) -> Result<f64> {
    let g0 = build_gamma0(handles, tol)?;
    let loops = gamma0_loops(&g0)?;
    let mut worst = 0.0f64;
    for ((a, b), (pa, pb)) in handles.iter().zip(&loops) {
        worst = worst.max(g0.path_monodromy(pa, &[])?.dist(a)).max(g0.path_monodromy(pb, &[])?.dist(b));
    }
    Ok(worst)
}

/// Gluing runs in double-double: the relation is exact, and the gluing
/// conjugation amplifies rounding in near-parallel eigenframes.
fn glue_scenario(ctx: &mut Ctx, mismatched: bool) -> Result<()> {
    let tol = ctx.opts.tol;
    let (mut sep, mut nonsep, mut round) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..ctx.opts.samples {
        let tilde = one_holed_piece::<Cdd>(&mut ctx.rng, None)?;
        let kappa = commutator(&tilde.handles[0].0, &tilde.handles[0].1).trace();
        let kappa = if mismatched { kappa + Cdd::real(0.5) } else { kappa };
        let mut hat = one_holed_piece(&mut ctx.rng, Some(kappa))?;
        if !mismatched && (hat.lambda - tilde.lambda).value().norm() > 1e-8 {
            hat.lambda = hat.lambda.recip();
            let boundary = commutator(&hat.handles[0].0, &hat.handles[0].1).inv();
            hat.frame = eigen_frame(&boundary, hat.lambda)?;
        }
        ctx.hash_c64(tilde.lambda.value());
        let handles = if mismatched {
            // The guard in `glue_separating` would refuse these pieces.
            let g = gluing_matrix(&tilde.frame, &hat.frame);
            let gi = g.inv();
            let mut hs: Vec<Handle<Cdd>> = tilde.handles.iter().map(|(a, b)| (g * *a * gi, g * *b * gi)).collect();
            hs.extend(hat.handles.iter().copied());
            hs
        } else {
            glue_separating(&tilde, &hat, 1e-8)?
        };
        sep = sep.max(relation_residual(&handles));
        if !mismatched {
            let rounded: Vec<Handle> = handles.iter().map(|(a, b)| (a.value(), b.value())).collect();
            round = round.max(handles_roundtrip(&rounded, 1e-8)?);
            let two = two_holed_piece::<Cdd>(&mut ctx.rng)?;
            ctx.hash_c64(two.lambda.value());
            nonsep = nonsep.max(relation_residual(&glue_nonseparating(&two, 1e-8)?));
        }
    }
    ctx.below("separating gluing relation", sep, tol / 100.0);
    if !mismatched {
        ctx.below("non-separating gluing relation", nonsep, tol / 100.0);
        ctx.below("canonical graph loop monodromies", round, tol / 100.0);
    }
    Ok(())
}

/// `Ω` on free basis directions with every derivative of the jumps taken
/// by central differences of step `h` in the free log coordinates.
pub fn omega_by_differences(pair: &AdmissiblePair, cs: &CoordinateSystem, free: &[C64], h: f64) -> Result<TwoFormMatrix> {
    let n = cs.dim();
    let eval = |t: &[C64]| -> Result<Vec<Vec<Mat2<C64>>>> {
        let p = cs.point_from_free(t);
        let ev = pair.evaluate(cs.params_of(&p))?;
        Ok((0..pair.graph.vertices.len()).map(|v| pair.vertex_jumps(&ev, v)).collect())
    };
    let base = eval(free)?;
    let mut d: Vec<Vec<Vec<Mat2<C64>>>> = Vec::with_capacity(n);
    for i in 0..n {
        let mut tp = free.to_vec();
        let mut tm = free.to_vec();
        tp[i] += h;
        tm[i] -= h;
        let (jp, jm) = (eval(&tp)?, eval(&tm)?);
        let s = C64::new(0.5 / h, 0.0);
        d.push(
            jp.iter()
                .zip(&jm)
                .map(|(vp, vm)| vp.iter().zip(vm).map(|(a, b)| (*a - *b).scale(s)).collect())
                .collect(),
        );
    }
    let mut m = TwoFormMatrix::zeros(cs.free.clone());
    for (v, js) in base.iter().enumerate() {
        let nl = js.len().saturating_sub(1);
        // D P_l = Σ_{k ≤ l} J_1 ⋯ D J_k ⋯ J_l by the product rule.
        let mut p = Mat2::identity();
        let mut dp: Vec<Mat2<C64>> = vec![Mat2::from_real(0.0, 0.0, 0.0, 0.0); n];
        for l in 0..nl {
            for (i, dpi) in dp.iter_mut().enumerate() {
                *dpi = *dpi * js[l] + p * d[i][v][l];
            }
            p = p * js[l];
            let (pi, ji) = (p.inv(), js[l].inv());
            for a in 0..n {
                for b in (a + 1)..n {
                    let x = (pi * dp[a] * ji * d[b][v][l]).trace() - (pi * dp[b] * ji * d[a][v][l]).trace();
                    m.coeffs[a][b] += x * 0.5;
                    m.coeffs[b][a] -= x * 0.5;
                }
            }
        }
    }
    Ok(m)
}

/// Central-difference gradient of `tr ρ(path)` in the free coordinates.
pub fn trace_gradient_by_differences(
    pair: &AdmissiblePair,
    cs: &CoordinateSystem,
    free: &[C64],
    path: &PathSpec,
    h: f64,
) -> Result<Vec<C64>> {
    (0..cs.dim())
        .map(|i| {
            let mut tp = free.to_vec();
            let mut tm = free.to_vec();
            tp[i] += h;
            tm[i] -= h;
            let fp = trace_of(pair, cs.params_of(&cs.point_from_free(&tp)), path)?;
            let fm = trace_of(pair, cs.params_of(&cs.point_from_free(&tm)), path)?;
            Ok((fp - fm) / (2.0 * h))
        })
        .collect()
}

fn rel_dev(a: C64, b: C64) -> f64 {
    (a - b).norm() / a.norm().max(b.norm()).max(1.0)
}

fn derivative_scenario(ctx: &mut Ctx) -> Result<()> {
    const STEP: f64 = 1e-5;
    const REL: f64 = 1e-6;
    let g2 = separating_g2()?;
    let steps = reduce_separating_torus_pair(&g2)?;
    let g0 = &steps.last().expect("reduction yields steps").pair;
    let loops = gamma0_loops(g0)?;
    let cs = &g2.coords;
    let (mut om_dev, mut grad_dev) = (0.0f64, 0.0f64);
    for _ in 0..ctx.opts.samples {
        let p = ctx.sample(cs)?;
        let x = cs.params_of(&p);
        let jet = omega_matrix(&g2.pair, x, cs)?;
        let fd = omega_by_differences(&g2.pair, cs, &p.free, STEP)?;
        for (r1, r2) in jet.coeffs.iter().zip(&fd.coeffs) {
            for (a, b) in r1.iter().zip(r2) {
                om_dev = om_dev.max(rel_dev(*a, *b));
            }
        }
        for (a, b) in &loops {
            for path in [a, b] {
                let gj = trace_gradient(g0, x, cs, path)?;
                let gf = trace_gradient_by_differences(g0, cs, &p.free, path, STEP)?;
                for (u, v) in gj.iter().zip(&gf) {
                    grad_dev = grad_dev.max(rel_dev(*u, *v));
                }
            }
        }
    }
    ctx.below("Ω entries vs central differences", om_dev, REL);
    ctx.below("trace gradients vs central differences", grad_dev, REL);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(name: &str) -> Report {
        run_scenario(name, &Options { seed: 7, samples: 4, tol: 1e-9 }).unwrap()
    }

    #[test]
    fn catalog_is_stable_and_unique() {
        let names: Vec<&str> = list_scenarios().iter().map(|s| s.name).collect();
        for n in ["sep-g2", "nonsep-g2", "goldman-bracket-g2", "trinion-relabel", "glue-roundtrip"] {
            assert!(names.contains(&n));
        }
        let mut sorted = names.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), names.len());
        assert!(matches!(run_scenario("nope", &Options::default()), Err(Error::UnknownScenario(_))));
    }

    #[test]
    fn positive_scenarios_pass() {
        for s in list_scenarios().iter().filter(|s| !s.negative) {
            let r = quick(s.name);
            assert!(r.passed, "{}", r.to_text());
        }
    }

    #[test]
    fn negative_controls_fail() {
        for s in list_scenarios().iter().filter(|s| s.negative) {
            let r = quick(s.name);
            assert!(!r.passed, "{}", r.to_text());
        }
    }

    #[test]
    fn reports_are_reproducible() {
        let (a, b) = (quick("sep-g2"), quick("sep-g2"));
        assert_eq!(a.digest, b.digest);
        assert_eq!(a.checks, b.checks);
        let c = run_scenario("sep-g2", &Options { seed: 8, samples: 4, tol: 1e-9 }).unwrap();
        assert_ne!(a.digest, c.digest);
    }

    #[test]
    fn relabel_jacobian_maps_target_forms() {
        let theta = trinion_target(TrinionGraph2::Theta);
        let back = pull_back_linear(&trinion_target(TrinionGraph2::ThetaPrime), &relabel_jacobian(), theta.basis.clone());
        assert_eq!(back.max_dev(&theta), 0.0);
    }

    #[test]
    fn eigen_frame_diagonalizes() {
        let m = Mat2::from_real(-2.0, 0.0, 5.0, -0.5);
        let c = eigen_frame(&m, C64::new(2.0, 0.0)).unwrap();
        let back = c * Mat2::diag(C64::new(-2.0, 0.0), C64::new(-0.5, 0.0)) * c.inv();
        assert!(back.dist(&m) < 1e-13);
        assert!((c.det() - 1.0).norm() < 1e-13);
    }
}
