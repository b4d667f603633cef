//! Command-line surface: file schemas, report rendering and exit codes.
//!
//! Exit codes follow the mathematical outcome:
//!
//! | command   | 0                   | 1                     | 2                |
//! |-----------|---------------------|-----------------------|------------------|
//! | `check`   | strict              | boundary              | not negative type|
//! | `witness` | witness found       | no witness exists     |                  |
//! | `verify`  | nontrivial equality | trivial equality      | fails            |
//!
//! Every other failure (I/O, parsing, validation, usage) exits with 3.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::metric::{self, MetricError, MetricSpace, NormOrder};
use crate::polyeq::{
    polygonal_interval, verify_equality, witness_at, witness_at_supremal, PolyEqError, PolygonalInterval,
    SignedSimplex, WitnessMethod, WitnessReport,
};
use crate::quadform::{classify, supremal, Classification, QuadFormError, SupremalOptions, SupremalStatus};

pub const EXIT_ERROR: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {path}: {source}")]
    Read { path: PathBuf, source: std::io::Error },
    #[error("cannot write {path}: {source}")]
    Write { path: PathBuf, source: std::io::Error },
    #[error("cannot parse {what}: {source}")]
    Parse { what: String, source: serde_json::Error },
    #[error("invalid space file: {0}")]
    Schema(String),
    #[error(transparent)]
    Metric(#[from] MetricError),
    #[error(transparent)]
    QuadForm(#[from] QuadFormError),
    #[error(transparent)]
    PolyEq(#[from] PolyEqError),
    #[error("{0}")]
    Usage(String),
}

// ---------------------------------------------------------------------------
// File schemas
// ---------------------------------------------------------------------------

/// Metric-space file in one of its three shapes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SpaceFile {
    Matrix {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        matrix: Vec<Vec<f64>>,
    },
    Graph {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        graph: GraphSpec,
    },
    Points {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        labels: Option<Vec<String>>,
        points: PointsSpec,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphSpec {
    pub n: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointsSpec {
    pub q: NormValue,
    pub coords: Vec<Vec<f64>>,
}

/// `q` as a number, or the string `"inf"` for the max norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum NormValue {
    Number(f64),
    Text(String),
}

impl NormValue {
    fn order(&self) -> Result<NormOrder, CliError> {
        match self {
            NormValue::Number(q) => Ok(NormOrder::Finite(*q)),
            NormValue::Text(s) if matches!(s.to_ascii_lowercase().as_str(), "inf" | "infinity" | "∞") => {
                Ok(NormOrder::Infinity)
            }
            NormValue::Text(s) => Err(CliError::Schema(format!("unrecognised norm order {s:?}"))),
        }
    }

    fn from_order(q: NormOrder) -> Self {
        match q {
            NormOrder::Finite(q) => NormValue::Number(q),
            NormOrder::Infinity => NormValue::Text("inf".into()),
        }
    }
}

impl SpaceFile {
    /// Parses a space file, picking the shape from its top-level key.
    pub fn parse(text: &str, what: &str) -> Result<Self, CliError> {
        let value: Value =
            serde_json::from_str(text).map_err(|source| CliError::Parse { what: what.into(), source })?;
        let shape = ["matrix", "graph", "points"].into_iter().filter(|k| value.get(k).is_some()).collect::<Vec<_>>();
        if shape.len() != 1 {
            return Err(CliError::Schema(format!(
                "{what}: expected exactly one of \"matrix\", \"graph\" or \"points\""
            )));
        }
        serde_json::from_value(value).map_err(|source| CliError::Parse { what: what.into(), source })
    }

    pub fn into_space(self) -> Result<MetricSpace, CliError> {
        let (labels, space) = match self {
            SpaceFile::Matrix { labels, matrix } => {
                let labels = labels.unwrap_or_else(|| metric::default_labels(matrix.len()));
                return Ok(metric::validate_metric(labels, &matrix)?);
            }
            SpaceFile::Graph { labels, graph } => (labels, metric::from_graph(graph.n, &graph.edges)?),
            SpaceFile::Points { labels, points } => (labels, metric::from_points(&points.coords, points.q.order()?)?),
        };
        match labels {
            Some(labels) => Ok(metric::validate_metric(labels, &space.rows())?),
            None => Ok(space),
        }
    }

    pub fn from_space(space: &MetricSpace) -> Self {
        SpaceFile::Matrix { labels: Some(space.labels().to_vec()), matrix: space.rows() }
    }
}

pub fn load_space(path: &Path) -> Result<MetricSpace, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    SpaceFile::parse(&text, &path.display().to_string())?.into_space()
}

pub fn load_simplex(path: &Path) -> Result<SignedSimplex, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Read { path: path.into(), source })?;
    serde_json::from_str(&text).map_err(|source| CliError::Parse { what: path.display().to_string(), source })
}

// ---------------------------------------------------------------------------
// Report schemas
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckOutput {
    pub p: f64,
    pub classification: Classification,
    pub lambda_max: f64,
    pub epsilon: f64,
    pub direction: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupremalOutput {
    pub status: SupremalStatus,
    pub diagnosis: String,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub estimate: Option<f64>,
    pub cap: f64,
    pub width_tol: f64,
    pub evaluations: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WitnessOutput {
    pub p: f64,
    pub xi: Vec<f64>,
    pub simplex: SignedSimplex,
    pub residual: f64,
    pub method: WitnessMethod,
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
    pub nontrivial: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NoWitnessOutput {
    pub p: Option<f64>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyOutput {
    pub p: f64,
    pub lhs: f64,
    pub rhs: f64,
    pub gap: f64,
    pub holds: bool,
    pub nontrivial: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum IntervalKind {
    Empty,
    ClosedRay,
    BeyondCap,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntervalOutput {
    pub interval: String,
    pub kind: IntervalKind,
    pub lo: Option<f64>,
    pub hi: Option<f64>,
    pub cap: f64,
}

/// Rounds `x` to 12 significant digits.
pub fn round_sig12(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn round_floats(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            if let Some(r) = n.as_f64().map(round_sig12).and_then(serde_json::Number::from_f64) {
                *n = r;
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_floats),
        Value::Object(map) => map.values_mut().for_each(round_floats),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 12 significant digits.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut v = serde_json::to_value(value).expect("report types serialize");
    round_floats(&mut v);
    let mut s = serde_json::to_string_pretty(&v).expect("values serialize");
    s.push('\n');
    s
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{:.12}", round_sig12(*x))).collect();
    format!("[{}]", parts.join(", "))
}

fn fmt_simplex(space_labels: &[String], q: &SignedSimplex) -> String {
    let side = |s: &[(usize, f64)]| {
        s.iter()
            .map(|&(i, w)| format!("{}({})", space_labels.get(i).map_or("?", String::as_str), round_sig12(w)))
            .collect::<Vec<_>>()
            .join(", ")
    };
    format!("[{}; {}]", side(&q.left), side(&q.right))
}

// ---------------------------------------------------------------------------
// Argument parsing
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Debug, Parser)]
#[command(name = "negtype", version, about = "p-negative type and p-polygonal equalities of finite metric spaces")]
pub struct Cli {
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Largest exponent probed when bracketing the supremal p-negative type.
    #[arg(long, default_value_t = crate::quadform::DEFAULT_CAP)]
    pub cap: f64,
    /// Absolute width of the reported bracket.
    #[arg(long = "width-tol", default_value_t = crate::quadform::DEFAULT_WIDTH_TOL)]
    pub width_tol: f64,
}

impl SearchArgs {
    fn options(&self) -> SupremalOptions {
        SupremalOptions { cap: self.cap, width_tol: self.width_tol }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum GenKind {
    Cycle,
    Path,
    Complete,
    Points,
    Ultrametric,
    Random,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify p-negative type at a fixed exponent.
    Check {
        space: PathBuf,
        #[arg(long)]
        p: f64,
        /// Absolute tolerance on the largest restricted eigenvalue.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Bracket the supremal p-negative type.
    Supremal {
        space: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Construct a nontrivial p-polygonal equality.
    Witness {
        space: PathBuf,
        #[arg(long, conflicts_with = "at_supremal", required_unless_present = "at_supremal")]
        p: Option<f64>,
        #[arg(long = "at-supremal")]
        at_supremal: bool,
        #[arg(long)]
        tol: Option<f64>,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Check a p-polygonal equality for a signed simplex.
    Verify {
        space: PathBuf,
        simplex: PathBuf,
        #[arg(long)]
        p: f64,
        /// Relative tolerance on |lhs − rhs|.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Report the set of exponents admitting a nontrivial polygonal equality.
    Interval {
        space: PathBuf,
        #[command(flatten)]
        search: SearchArgs,
    },
    /// Generate a metric-space file.
    Gen {
        #[arg(value_enum)]
        kind: GenKind,
        /// Number of points.
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Norm order for `points` (a number >= 1, or `inf`).
        #[arg(long, default_value = "2")]
        q: String,
        /// Dimension for `points`.
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Result of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

impl Outcome {
    fn ok(code: i32, stdout: String) -> Self {
        Outcome { code, stdout, stderr: String::new() }
    }
}

/// Parses `args` (including the program name) and runs the command.
pub fn run<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => execute(&cli).unwrap_or_else(|e| Outcome {
            code: EXIT_ERROR,
            stdout: String::new(),
            stderr: format!("error: {e}\n"),
        }),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_ERROR } else { 0 };
            let rendered = e.render().to_string();
            if e.use_stderr() {
                Outcome { code, stdout: String::new(), stderr: rendered }
            } else {
                Outcome::ok(code, rendered)
            }
        }
    }
}

pub fn execute(cli: &Cli) -> Result<Outcome, CliError> {
    let format = cli.format;
    match &cli.command {
        Command::Check { space, p, tol } => cmd_check(&load_space(space)?, *p, *tol, format),
        Command::Supremal { space, search } => cmd_supremal(&load_space(space)?, search.options(), format),
        Command::Witness { space, p, at_supremal, tol, search } => {
            let space = load_space(space)?;
            let target = if *at_supremal {
                WitnessTarget::Supremal(search.options())
            } else {
                WitnessTarget::Fixed(p.ok_or_else(|| CliError::Usage("--p or --at-supremal is required".into()))?)
            };
            cmd_witness(&space, target, *tol, format)
        }
        Command::Verify { space, simplex, p, tol } => {
            cmd_verify(&load_space(space)?, &load_simplex(simplex)?, *p, *tol, format)
        }
        Command::Interval { space, search } => cmd_interval(&load_space(space)?, search.options(), format),
        Command::Gen { kind, n, seed, q, dim, out } => {
            let q = match q.parse::<f64>() {
                Ok(v) => NormValue::Number(v),
                Err(_) => NormValue::Text(q.clone()),
            };
            let file = cmd_gen(*kind, *n, *seed, q.order()?, *dim)?;
            let text = to_json(&file);
            match out {
                Some(path) => {
                    std::fs::write(path, &text).map_err(|source| CliError::Write { path: path.clone(), source })?;
                    Ok(Outcome::ok(0, String::new()))
                }
                None => Ok(Outcome::ok(0, text)),
            }
        }
    }
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

pub fn cmd_check(space: &MetricSpace, p: f64, tol: Option<f64>, format: Format) -> Result<Outcome, CliError> {
    let report = classify(space, p, tol)?;
    let code = match report.classification {
        Classification::Strict => 0,
        Classification::Boundary => 1,
        Classification::NotNegType => 2,
    };
    let out = CheckOutput {
        p,
        classification: report.classification,
        lambda_max: report.lambda_max,
        epsilon: report.epsilon,
        direction: report.direction.as_slice().to_vec(),
    };
    let text = match format {
        Format::Json => to_json(&out),
        Format::Text => {
            let verdict = match out.classification {
                Classification::Strict => format!("strict {p}-negative type"),
                Classification::Boundary => format!("{p}-negative type, not strict"),
                Classification::NotNegType => format!("not of {p}-negative type"),
            };
            let mut s = String::new();
            let _ = writeln!(s, "classification: {} ({verdict})", out.classification);
            let _ = writeln!(s, "lambda_max: {:e}", round_sig12(out.lambda_max));
            let _ = writeln!(s, "epsilon: {:e}", round_sig12(out.epsilon));
            let _ = writeln!(s, "direction: {}", fmt_vec(&out.direction));
            s
        }
    };
    Ok(Outcome::ok(code, text))
}

pub fn cmd_supremal(space: &MetricSpace, options: SupremalOptions, format: Format) -> Result<Outcome, CliError> {
    let sup = supremal(space, options)?;
    let (diagnosis, lo, hi) = match sup.status {
        SupremalStatus::Finite => ("finite".to_string(), Some(sup.lo), Some(sup.hi)),
        SupremalStatus::InfiniteUltrametric => ("infinite (ultrametric)".to_string(), None, None),
        SupremalStatus::ExceedsCap => (format!("exceeds cap {}", sup.cap), Some(sup.cap), None),
    };
    let out = SupremalOutput {
        status: sup.status,
        diagnosis,
        lo,
        hi,
        estimate: sup.estimate(),
        cap: sup.cap,
        width_tol: sup.width_tol,
        evaluations: sup.evaluations,
    };
    let text = match format {
        Format::Json => to_json(&out),
        Format::Text => {
            let mut s = String::new();
            match out.status {
                SupremalStatus::Finite => {
                    let _ = writeln!(
                        s,
                        "supremal p-negative type: {:.12}",
                        round_sig12(sup.estimate().unwrap_or(f64::NAN))
                    );
                    let _ = writeln!(s, "bracket: [{:.12}, {:.12}]", sup.lo, sup.hi);
                }
                SupremalStatus::InfiniteUltrametric => {
                    let _ = writeln!(s, "supremal p-negative type: infinite (ultrametric)");
                }
                SupremalStatus::ExceedsCap => {
                    let _ = writeln!(s, "supremal p-negative type: > {} (exceeds cap)", sup.cap);
                }
            }
            let _ = writeln!(s, "evaluations: {}", sup.evaluations);
            s
        }
    };
    Ok(Outcome::ok(0, text))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WitnessTarget {
    Fixed(f64),
    Supremal(SupremalOptions),
}

pub fn cmd_witness(
    space: &MetricSpace,
    target: WitnessTarget,
    tol: Option<f64>,
    format: Format,
) -> Result<Outcome, CliError> {
    let (p, result) = match target {
        WitnessTarget::Fixed(p) => (Some(p), witness_at(space, p, tol)),
        WitnessTarget::Supremal(options) => {
            let sup = supremal(space, options)?;
            (sup.estimate(), witness_at_supremal(space, &sup))
        }
    };
    let witness = match result {
        Ok(w) => w,
        Err(PolyEqError::NotApplicable(reason)) => {
            let out = NoWitnessOutput { p, reason };
            let text = match format {
                Format::Json => to_json(&out),
                Format::Text => format!("{}\n", out.reason),
            };
            return Ok(Outcome::ok(1, text));
        }
        Err(e) => return Err(e.into()),
    };
    let out = witness_output(space, &witness)?;
    let text = match format {
        Format::Json => to_json(&out),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "p: {}", round_sig12(out.p));
            let _ = writeln!(s, "method: {}", out.method);
            let _ = writeln!(s, "xi: {}", fmt_vec(&out.xi));
            let _ = writeln!(s, "simplex: {}", fmt_simplex(space.labels(), &out.simplex));
            let _ = writeln!(s, "lhs: {}", round_sig12(out.lhs));
            let _ = writeln!(s, "rhs: {}", round_sig12(out.rhs));
            let _ = writeln!(s, "residual: {:e}", round_sig12(out.residual));
            let _ = writeln!(s, "nontrivial equality: {}", out.holds && out.nontrivial);
            s
        }
    };
    Ok(Outcome::ok(0, text))
}

fn witness_output(space: &MetricSpace, w: &WitnessReport) -> Result<WitnessOutput, CliError> {
    let v = verify_equality(space, w.p, &w.simplex, None)?;
    Ok(WitnessOutput {
        p: w.p,
        xi: w.xi.as_slice().to_vec(),
        simplex: w.simplex.clone(),
        residual: w.residual,
        method: w.method,
        lhs: w.lhs,
        rhs: w.rhs,
        holds: v.holds,
        nontrivial: v.nontrivial,
    })
}

pub fn cmd_verify(
    space: &MetricSpace,
    q: &SignedSimplex,
    p: f64,
    tol: Option<f64>,
    format: Format,
) -> Result<Outcome, CliError> {
    let v = verify_equality(space, p, q, tol)?;
    let code = match (v.holds, v.nontrivial) {
        (true, true) => 0,
        (true, false) => 1,
        _ => 2,
    };
    let out = VerifyOutput {
        p,
        lhs: v.lhs,
        rhs: v.rhs,
        gap: v.gap,
        holds: v.holds,
        nontrivial: v.nontrivial,
        tolerance: v.tolerance,
    };
    let text = match format {
        Format::Json => to_json(&out),
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(s, "lhs: {}", round_sig12(out.lhs));
            let _ = writeln!(s, "rhs: {}", round_sig12(out.rhs));
            let _ = writeln!(s, "gap: {}", round_sig12(out.gap));
            let _ = writeln!(s, "holds: {}", out.holds);
            let _ = writeln!(s, "nontrivial: {}", out.nontrivial);
            s
        }
    };
    Ok(Outcome::ok(code, text))
}

pub fn cmd_interval(space: &MetricSpace, options: SupremalOptions, format: Format) -> Result<Outcome, CliError> {
    let sup = supremal(space, options)?;
    let interval = polygonal_interval(&sup);
    let (kind, lo, hi) = match interval {
        PolygonalInterval::Empty => (IntervalKind::Empty, None, None),
        PolygonalInterval::ClosedRay { lo, hi } => (IntervalKind::ClosedRay, Some(lo), Some(hi)),
        PolygonalInterval::BeyondCap { cap } => (IntervalKind::BeyondCap, Some(cap), None),
    };
    let out = IntervalOutput { interval: interval.to_string(), kind, lo, hi, cap: sup.cap };
    let text = match format {
        Format::Json => to_json(&out),
        Format::Text => format!("{}\n", out.interval),
    };
    Ok(Outcome::ok(0, text))
}

pub fn cmd_gen(kind: GenKind, n: usize, seed: u64, q: NormOrder, dim: usize) -> Result<SpaceFile, CliError> {
    let graph = |edges: Vec<(usize, usize, f64)>| -> Result<SpaceFile, CliError> {
        metric::from_graph(n, &edges)?;
        Ok(SpaceFile::Graph { labels: None, graph: GraphSpec { n, edges } })
    };
    match kind {
        GenKind::Cycle => {
            if n < 3 {
                return Err(CliError::Usage("a cycle needs at least 3 vertices".into()));
            }
            graph((0..n).map(|i| (i, (i + 1) % n, 1.0)).collect())
        }
        GenKind::Path => graph((1..n).map(|i| (i - 1, i, 1.0)).collect()),
        GenKind::Complete => graph((0..n).flat_map(|i| ((i + 1)..n).map(move |j| (i, j, 1.0))).collect()),
        GenKind::Points => {
            if dim == 0 {
                return Err(CliError::Usage("--dim must be positive".into()));
            }
            let (coords, _) = metric::random_points(n, dim, q, seed)?;
            let coords =
                coords.into_iter().map(|c| c.into_iter().map(round_sig12).collect()).collect::<Vec<Vec<f64>>>();
            metric::from_points(&coords, q)?;
            Ok(SpaceFile::Points { labels: None, points: PointsSpec { q: NormValue::from_order(q), coords } })
        }
        GenKind::Ultrametric => Ok(rounded(&metric::random_ultrametric(n, seed)?)?),
        GenKind::Random => Ok(rounded(&metric::random_metric(n, seed)?)?),
    }
}

/// Matrix file with entries rounded as they will be printed, revalidated.
fn rounded(space: &MetricSpace) -> Result<SpaceFile, CliError> {
    let rows: Vec<Vec<f64>> = space.rows().into_iter().map(|r| r.into_iter().map(round_sig12).collect()).collect();
    let checked = metric::validate_metric(space.labels().to_vec(), &rows)?;
    Ok(SpaceFile::from_space(&checked))
}
