use clap::{Args, Parser, Subcommand, ValueEnum};
use logcanon::coords::{CoordinateSystem, Domain, Point};
use logcanon::error::Error;
use logcanon::form::omega_matrix;
use logcanon::specfmt::{parse_document, write_graph, Document, GraphDocument};
use logcanon::verify::{list_scenarios, run_many, Options, Report};
use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Canonical two-form of SL(2,ℂ) character varieties from ribbon graphs.
#[derive(Parser)]
#[command(name = "logcanon", version)]
struct Cli {
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Subcommand)]
enum Command {
    /// List the verification scenarios.
    List(OutputArgs),
    /// Run verification scenarios.
    Verify(VerifyArgs),
    /// Parse a graph or decomposition file and check admissibility.
    Validate(GraphArgs),
    /// Coefficient matrix of Ω in the free coordinates.
    Omega(GraphArgs),
    /// Monodromies of the named paths of a graph.
    Monodromy(GraphArgs),
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Args)]
struct OutputArgs {
    /// Write data here instead of standard output.
    #[arg(long)]
    output: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
}

#[derive(Args)]
struct VerifyArgs {
    /// Scenario name; every scenario when absent.
    #[arg(long)]
    case: Option<String>,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

#[derive(Args)]
struct GraphArgs {
    /// Graph or decomposition document.
    #[arg(long)]
    graph: PathBuf,
    /// JSON object binding coordinate names to `[re, im]` values; a random
    /// admitted point is drawn when absent.
    #[arg(long)]
    point: Option<PathBuf>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 1e-9)]
    tol: f64,
    #[command(flatten)]
    out: OutputArgs,
}

enum Failure {
    Usage(String),
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Failure {
        match e {
            Error::Parse { .. } | Error::UnknownScenario(_) | Error::UnknownCoordinate(_) | Error::Point(_) => {
                Failure::Usage(e.to_string())
            }
            other => Failure::Check(other.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, Failure>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let outcome = match cli.cmd {
        Command::List(a) => list(&a),
        Command::Verify(a) => verify(&a),
        Command::Validate(a) => validate(&a),
        Command::Omega(a) => omega(&a),
        Command::Monodromy(a) => monodromy(&a),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Check(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
    }
}

fn emit(out: &OutputArgs, data: &str) -> CliResult<()> {
    match &out.output {
        Some(p) => std::fs::write(p, data).map_err(|e| Failure::Usage(format!("{}: {e}", p.display()))),
        None => {
            print!("{data}");
            Ok(())
        }
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("reports serialize") + "\n"
}

fn csv_text(header: &[&str], rows: Vec<Vec<String>>) -> CliResult<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io = |e: csv::Error| Failure::Check(e.to_string());
    w.write_record(header).map_err(io)?;
    for r in rows {
        w.write_record(&r).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Check(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn list(out: &OutputArgs) -> CliResult<bool> {
    #[derive(Serialize)]
    struct Entry {
        name: &'static str,
        description: &'static str,
        negative: bool,
    }
    let entries: Vec<Entry> =
        list_scenarios().iter().map(|s| Entry { name: s.name, description: s.description, negative: s.negative }).collect();
    let data = match out.format {
        Format::Text => entries.iter().fold(String::new(), |mut s, e| {
            let tag = if e.negative { " (negative control)" } else { "" };
            let _ = writeln!(s, "{:<26} {}{tag}", e.name, e.description);
            s
        }),
        Format::Json => to_json(&entries),
        Format::Csv => csv_text(
            &["name", "description", "negative"],
            entries.iter().map(|e| vec![e.name.into(), e.description.into(), e.negative.to_string()]).collect(),
        )?,
    };
    emit(out, &data)?;
    Ok(true)
}

/// A negative control succeeds when its checks fail.
fn as_expected(r: &Report) -> bool {
    r.passed != r.negative
}

fn verify(a: &VerifyArgs) -> CliResult<bool> {
    let names: Vec<&str> = match &a.case {
        Some(c) => vec![c.as_str()],
        None => list_scenarios().iter().map(|s| s.name).collect(),
    };
    let opts = Options { seed: a.seed, samples: a.samples, tol: a.tol };
    let reports = run_many(&names, &opts)?;
    let data = match a.out.format {
        Format::Text => reports.iter().fold(String::new(), |mut s, r| {
            s.push_str(&r.to_text());
            if r.negative {
                let verdict = if as_expected(r) { "detected" } else { "NOT detected" };
                let _ = writeln!(s, "  negative control {verdict}");
            }
            s
        }),
        Format::Json => to_json(&reports),
        Format::Csv => csv_text(
            &["scenario", "check", "residual", "bound", "direction", "passed"],
            reports
                .iter()
                .flat_map(|r| {
                    r.checks.iter().map(|c| {
                        let dir = if c.direction == logcanon::verify::Direction::Below { "below" } else { "above" };
                        vec![
                            r.scenario.clone(),
                            c.name.clone(),
                            format!("{:e}", c.residual),
                            format!("{:e}", c.bound),
                            dir.to_string(),
                            c.passed.to_string(),
                        ]
                    })
                })
                .collect(),
        )?,
    };
    emit(&a.out, &data)?;
    let failed: Vec<&Report> = reports.iter().filter(|r| !as_expected(r)).collect();
    for r in &failed {
        let why = r.error.clone().unwrap_or_else(|| format!("max deviation {:.3e}", r.max_residual()));
        eprintln!("{}: failed ({why})", r.scenario);
    }
    Ok(failed.is_empty())
}

fn load_graph(path: &Path) -> CliResult<GraphDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    let located = |e: Error| match e {
        Error::Parse { .. } => Failure::Usage(format!("{}:{e}", path.display())),
        other => Failure::from(other),
    };
    match parse_document(&text).map_err(located)? {
        Document::Graph(g) => Ok(g),
        Document::Decomposition(d) => Ok(GraphDocument::from(&d.build()?)),
    }
}

fn load_point(a: &GraphArgs, cs: &CoordinateSystem) -> CliResult<Point> {
    match &a.point {
        Some(p) => {
            let text = std::fs::read_to_string(p).map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            let raw: HashMap<String, [f64; 2]> = serde_json::from_str(&text)
                .map_err(|e| Failure::Usage(format!("{}: {e}", p.display())))?;
            let bound = raw.into_iter().map(|(k, [re, im])| (k, C64::new(re, im))).collect();
            Ok(cs.point_from_bindings(&bound, a.tol.max(1e-12))?)
        }
        None => Ok(cs.sample(&mut ChaCha8Rng::seed_from_u64(a.seed), &Domain::default())?),
    }
}

fn fmt_c64(z: C64) -> String {
    if z.im == 0.0 {
        format!("{}", z.re)
    } else {
        format!("{}{:+}i", z.re, z.im)
    }
}

fn validate(a: &GraphArgs) -> CliResult<bool> {
    #[derive(Serialize)]
    struct Summary {
        vertices: usize,
        edges: usize,
        parameters: usize,
        free: Vec<String>,
        relation_residual: f64,
        tangency_residual: f64,
        vertex_residuals: Vec<(String, f64)>,
        inverse_residual: f64,
        tol: f64,
        admissible: bool,
    }
    let doc = load_graph(&a.graph)?;
    let p = load_point(a, &doc.coords)?;
    let rep = doc.pair.validate_admissible(doc.coords.params_of(&p), a.tol)?;
    let s = Summary {
        vertices: doc.pair.graph.vertices.len(),
        edges: doc.pair.graph.edges.len(),
        parameters: doc.coords.params.len(),
        free: doc.coords.free.clone(),
        relation_residual: doc.coords.relation_residual(&p)?,
        tangency_residual: doc.coords.tangency_residual(),
        vertex_residuals: rep.vertex_residuals,
        inverse_residual: rep.inverse_residual,
        tol: a.tol,
        admissible: rep.admissible,
    };
    let ok = s.admissible && s.relation_residual <= a.tol && s.tangency_residual <= a.tol;
    let data = match a.out.format {
        Format::Text => {
            let mut t = String::new();
            let _ = writeln!(t, "{} vertices, {} edges, {} parameters", s.vertices, s.edges, s.parameters);
            let _ = writeln!(t, "free coordinates ({}): {}", s.free.len(), s.free.join(" "));
            let _ = writeln!(t, "relation residual {:.3e}, tangency residual {:.3e}", s.relation_residual, s.tangency_residual);
            for (v, r) in &s.vertex_residuals {
                let _ = writeln!(t, "vertex {v:<12} {r:.3e}");
            }
            let _ = writeln!(t, "inverse residual {:.3e}", s.inverse_residual);
            let _ = writeln!(t, "{}", if ok { "valid" } else { "INVALID" });
            t
        }
        Format::Json => to_json(&s),
        Format::Csv => csv_text(
            &["vertex", "residual"],
            s.vertex_residuals.iter().map(|(v, r)| vec![v.clone(), format!("{r:e}")]).collect(),
        )?,
    };
    // The normalized document goes to `--output`; the report always to stdout.
    if let Some(path) = &a.out.output {
        std::fs::write(path, write_graph(&doc)).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))?;
    }
    print!("{data}");
    if !ok {
        eprintln!("not admissible at the chosen point (max residual {:.3e})", rep.max_residual);
    }
    Ok(ok)
}

fn omega(a: &GraphArgs) -> CliResult<bool> {
    let doc = load_graph(&a.graph)?;
    let p = load_point(a, &doc.coords)?;
    let m = omega_matrix(&doc.pair, doc.coords.params_of(&p), &doc.coords)?;
    let data = match a.out.format {
        Format::Text => m.to_text(),
        Format::Json => to_json(&m),
        Format::Csv => m.to_csv()?,
    };
    emit(&a.out, &data)?;
    Ok(true)
}

fn monodromy(a: &GraphArgs) -> CliResult<bool> {
    #[derive(Serialize)]
    struct Entry {
        path: String,
        matrix: [[f64; 2]; 4],
        trace: [f64; 2],
    }
    let doc = load_graph(&a.graph)?;
    let p = load_point(a, &doc.coords)?;
    let params = doc.coords.params_of(&p);
    let mut entries = Vec::new();
    for (name, path) in &doc.paths {
        let m = doc.pair.path_monodromy(path, params)?;
        let pair = |z: C64| [z.re, z.im];
        entries.push(Entry {
            path: name.clone(),
            matrix: [pair(m.a), pair(m.b), pair(m.c), pair(m.d)],
            trace: pair(m.trace()),
        });
    }
    let c = |x: [f64; 2]| fmt_c64(C64::new(x[0], x[1]));
    let data = match a.out.format {
        Format::Text => entries.iter().fold(String::new(), |mut s, e| {
            let [m11, m12, m21, m22] = e.matrix.map(c);
            let _ = writeln!(s, "{}: [{m11}, {m12}; {m21}, {m22}]  tr {}", e.path, c(e.trace));
            s
        }),
        Format::Json => to_json(&entries),
        Format::Csv => csv_text(
            &["path", "m11", "m12", "m21", "m22", "trace"],
            entries
                .iter()
                .map(|e| {
                    let mut r = vec![e.path.clone()];
                    r.extend(e.matrix.iter().map(|x| c(*x)));
                    r.push(c(e.trace));
                    r
                })
                .collect(),
        )?,
    };
    emit(&a.out, &data)?;
    Ok(true)
}
