//! Command-line front end. Output is deterministic: fixed row order and
//! 15 significant digits.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_complex::Complex64;

use crate::error::Error;
use crate::format::{format_complex, format_real, parse_complex, parse_function, parse_graph, parse_real};
use crate::graph::{normalize_boundary, validate_condition, MetricGraph};
use crate::interior::Interior;
use crate::lap::{embedded_probe, exceptional_scan, lap_sweep, Classification, LapConfig};
use crate::resolvent::{evaluate, Branch, CompositeFunction, Formula, ResolventConfig};
use crate::settings::Tolerances;
use crate::spectrum::{default_step, find_eigenvalues, ScanConfig};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "qgraph", version, about = "Spectral and resolvent computations on quantum graphs with leads")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a graph file: condition admissibility and boundary normal form.
    Validate(Common),
    /// Eigenvalues of the compact part with Dirichlet data on the boundary.
    Spectrum(Common),
    /// Dirichlet-to-Neumann matrix entries.
    Dtn(Common),
    /// Resolvent quadratic form and residual diagnostics.
    Resolvent(Common),
    /// Epsilon-ladder sweep of the resolvent towards the real axis.
    LapSweep(Common),
    /// Exceptional set on a real window.
    Scan(Common),
    /// Classify a real point as embedded eigenvalue or regular.
    Probe(Common),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OutputFormat {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormulaArg {
    Derived,
    Printed,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum BranchArg {
    Principal,
    Physical,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long)]
    pub function: Option<PathBuf>,
    /// Comma-separated complex values, e.g. `2+1i,3.7`.
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<String>,
    /// Real window `a,b`.
    #[arg(long)]
    pub window: Option<String>,
    #[arg(long)]
    pub step: Option<f64>,
    /// Imaginary part added to every window grid point.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub imag: f64,
    /// Comma-separated, strictly decreasing.
    #[arg(long)]
    pub eps_ladder: Option<String>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    pub format: OutputFormat,
    #[arg(long, value_enum, default_value_t = FormulaArg::Derived)]
    pub formula: FormulaArg,
    #[arg(long, value_enum, default_value_t = BranchArg::Principal)]
    pub branch: BranchArg,
    /// Skip sweep points near exceptional points instead of failing.
    #[arg(long)]
    pub exclude: bool,
    /// Distance at which leads are moved out when the graph is not in
    /// boundary normal form.
    #[arg(long, default_value_t = 1.0)]
    pub offset: f64,
    #[arg(long)]
    pub accept_tol: Option<f64>,
    #[arg(long)]
    pub res_tol: Option<f64>,
    #[arg(long)]
    pub exclusion_radius: Option<f64>,
}

/// Failure with its exit status.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        Self {
            code: if e.is_numerical() { EXIT_NUMERICAL } else { EXIT_INPUT },
            message: e.to_string(),
        }
    }
}

fn input_error(msg: impl Into<String>) -> CliError {
    CliError {
        code: EXIT_INPUT,
        message: msg.into(),
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError {
        code: EXIT_IO,
        message: format!("{}: {e}", path.display()),
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

/// One output field: numbers are written bare, text quoted in JSON.
enum Field {
    Num(String),
    Text(String),
}

struct Table {
    columns: Vec<&'static str>,
    rows: Vec<Vec<Field>>,
}

impl Table {
    fn new(columns: &[&'static str]) -> Self {
        Self {
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    fn push(&mut self, row: Vec<Field>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    fn render(&self, format: OutputFormat) -> String {
        let mut out = String::new();
        match format {
            OutputFormat::Csv => {
                out.push_str(&self.columns.join(","));
                out.push('\n');
                for row in &self.rows {
                    let cells: Vec<&str> = row
                        .iter()
                        .map(|f| match f {
                            Field::Num(s) | Field::Text(s) => s.as_str(),
                        })
                        .collect();
                    out.push_str(&cells.join(","));
                    out.push('\n');
                }
            }
            OutputFormat::Jsonl => {
                for row in &self.rows {
                    let cells: Vec<String> = self
                        .columns
                        .iter()
                        .zip(row)
                        .map(|(c, f)| {
                            let v = match f {
                                Field::Num(s) => s.clone(),
                                Field::Text(s) => serde_json::Value::String(s.clone()).to_string(),
                            };
                            format!("\"{c}\":{v}")
                        })
                        .collect();
                    out.push('{');
                    out.push_str(&cells.join(","));
                    out.push_str("}\n");
                }
            }
        }
        out
    }
}

fn num(x: f64) -> Field {
    Field::Num(format_real(x))
}

fn cplx(z: Complex64) -> Field {
    Field::Text(format_complex(z))
}

fn text(s: impl Into<String>) -> Field {
    Field::Text(s.into())
}

fn int(i: usize) -> Field {
    Field::Num(i.to_string())
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| io_error(path, e))
}

fn with_path(path: &Path, e: Error) -> CliError {
    let mut err = CliError::from(e);
    err.message = format!("{}: {}", path.display(), err.message);
    err
}

fn load_graph(path: &Path) -> CliResult<MetricGraph<f64>> {
    parse_graph(&read(path)?).map_err(|e| with_path(path, e))
}

/// The graph in normal form plus the function transferred onto it.
fn load_inputs(c: &Common, need_function: bool) -> CliResult<(MetricGraph<f64>, CompositeFunction<f64>)> {
    let raw = load_graph(&c.graph)?;
    let f = match (&c.function, need_function) {
        (Some(p), _) => parse_function(&read(p)?).map_err(|e| with_path(p, e))?,
        (None, true) => return Err(input_error("this command needs --function")),
        (None, false) => CompositeFunction::zero(),
    };
    if raw.is_normalized() {
        return Ok((raw, f));
    }
    let n = normalize_boundary(&raw, c.offset)?;
    log::warn!(
        "graph is not in boundary normal form; moved {} lead(s) out by {}",
        n.moved.len(),
        c.offset
    );
    let f = f.transfer(&n.moved);
    Ok((n.graph, f))
}

fn tolerances(c: &Common) -> CliResult<Tolerances<f64>> {
    let mut t = Tolerances::default();
    for (value, slot, name) in [
        (c.accept_tol, &mut t.accept_tol, "accept-tol"),
        (c.res_tol, &mut t.res_tol, "res-tol"),
        (c.exclusion_radius, &mut t.exclusion_radius, "exclusion-radius"),
    ] {
        if let Some(v) = value {
            if !(v > 0.0 && v.is_finite()) {
                return Err(input_error(format!("--{name} must be positive, got {v}")));
            }
            *slot = v;
        }
    }
    Ok(t)
}

fn parse_window(c: &Common) -> CliResult<(f64, f64)> {
    let w = c.window.as_deref().ok_or_else(|| input_error("this command needs --window a,b"))?;
    let parts: Vec<f64> = w
        .split(',')
        .map(|x| parse_real(x).ok_or_else(|| input_error(format!("bad window bound `{}`", x.trim()))))
        .collect::<CliResult<_>>()?;
    match parts[..] {
        [a, b] if a < b => Ok((a, b)),
        _ => Err(input_error(format!("--window needs a,b with a < b, got `{w}`"))),
    }
}

fn positive_step(step: f64) -> CliResult<f64> {
    if step > 0.0 && step.is_finite() {
        Ok(step)
    } else {
        Err(input_error(format!("--step must be positive, got {step}")))
    }
}

/// Explicit `--lambda` list, or the window grid shifted by `--imag`.
fn lambdas(c: &Common) -> CliResult<Vec<Complex64>> {
    if let Some(list) = &c.lambda {
        let out: Vec<Complex64> = list
            .split(',')
            .map(|x| parse_complex(x).ok_or_else(|| input_error(format!("bad lambda `{}`", x.trim()))))
            .collect::<CliResult<_>>()?;
        return Ok(out);
    }
    let (a, b) = parse_window(c)?;
    let step = positive_step(c.step.ok_or_else(|| input_error("a window grid needs --step"))?)?;
    let n = ((b - a) / step + 1e-9).floor() as usize;
    Ok((0..=n).map(|i| Complex64::new(a + step * i as f64, c.imag)).collect())
}

fn ladder(c: &Common) -> CliResult<Vec<f64>> {
    match &c.eps_ladder {
        None => Ok(crate::lap::default_ladder()),
        Some(s) => s
            .split(',')
            .map(|x| parse_real(x).ok_or_else(|| input_error(format!("bad epsilon `{}`", x.trim()))))
            .collect(),
    }
}

fn validate(c: &Common) -> CliResult<Table> {
    let g = load_graph(&c.graph)?;
    let mut t = Table::new(&["vertex", "degree", "rank", "rank_ratio", "hermitian_defect", "boundary", "status"]);
    for (v, cond) in g.conditions() {
        let check = validate_condition(cond)?;
        t.push(vec![
            int(v),
            int(cond.degree()),
            int(check.rank),
            num(check.rank_ratio),
            num(check.hermitian_defect),
            text(if g.is_boundary(v) { "yes" } else { "no" }),
            text(if check.is_ok() { "ok" } else { "violated" }),
        ]);
    }
    if let Some(msg) = g.normal_form_violation() {
        log::warn!("not in boundary normal form ({msg}); other commands will move leads out by --offset");
    }
    Ok(t)
}

fn spectrum(c: &Common) -> CliResult<Table> {
    let (g, _) = load_inputs(c, false)?;
    let window = parse_window(c)?;
    let mut cfg = ScanConfig::new(window, positive_step(c.step.unwrap_or_else(|| default_step(&g)))?)?;
    cfg.accept_tol = tolerances(c)?.accept_tol;
    let mut t = Table::new(&["lambda", "multiplicity", "smin"]);
    for h in find_eigenvalues(&g, &cfg)? {
        t.push(vec![num(h.lambda), int(h.multiplicity), num(h.smin)]);
    }
    Ok(t)
}

fn dtn(c: &Common) -> CliResult<Table> {
    let (g, _) = load_inputs(c, false)?;
    let tol = tolerances(c)?;
    let boundary = g.boundary();
    let mut t = Table::new(&["lambda", "row_vertex", "col_vertex", "value"]);
    for lam in lambdas(c)? {
        let d = Interior::with_tolerances(&g, lam, tol)?.dtn()?;
        for (i, vi) in boundary.iter().enumerate() {
            for (j, vj) in boundary.iter().enumerate() {
                t.push(vec![cplx(lam), int(*vi), int(*vj), cplx(d.matrix[(i, j)])]);
            }
        }
    }
    Ok(t)
}

fn join_complex(v: &[Complex64]) -> Field {
    text(v.iter().map(|z| format_complex(*z)).collect::<Vec<_>>().join(";"))
}

fn resolvent(c: &Common) -> CliResult<Table> {
    let (g, f) = load_inputs(c, true)?;
    let cfg = ResolventConfig {
        formula: match c.formula {
            FormulaArg::Derived => Formula::Derived,
            FormulaArg::Printed => Formula::Printed,
        },
        branch: match c.branch {
            BranchArg::Principal => Branch::Principal,
            BranchArg::Physical => Branch::Physical,
        },
        tolerances: tolerances(c)?,
    };
    let mut t = Table::new(&[
        "lambda",
        "k",
        "value",
        "a",
        "u1_0",
        "robin_residual",
        "trace_residual",
        "flux_residual",
        "scale",
        "valid",
    ]);
    for lam in lambdas(c)? {
        let s = evaluate(&g, &f, lam, &cfg)?;
        t.push(vec![
            cplx(lam),
            cplx(s.k),
            cplx(s.value),
            join_complex(&s.a),
            join_complex(&s.u1_at_zero),
            num(s.residuals.robin),
            num(s.residuals.trace),
            num(s.residuals.flux),
            num(s.residuals.scale),
            Field::Num(s.valid.to_string()),
        ]);
    }
    Ok(t)
}

fn lap(c: &Common) -> CliResult<Table> {
    let (g, f) = load_inputs(c, true)?;
    let window = parse_window(c)?;
    let step = positive_step(c.step.ok_or_else(|| input_error("lap-sweep needs --step"))?)?;
    let cfg = LapConfig {
        ladder: ladder(c)?,
        exclude: c.exclude,
        tolerances: tolerances(c)?,
        ..LapConfig::new(step)
    };
    let sweep = lap_sweep(&g, &f, window, &cfg)?;
    let mut t = Table::new(&[
        "lambda",
        "eps",
        "re",
        "im",
        "abs",
        "continued_re",
        "continued_im",
        "deviation",
    ]);
    for row in &sweep.rows {
        for ((eps, v), dev) in sweep.ladder.iter().zip(&row.values).zip(&row.deviations) {
            t.push(vec![
                num(row.lambda),
                num(*eps),
                num(v.re),
                num(v.im),
                num(v.norm()),
                num(row.continued.re),
                num(row.continued.im),
                num(*dev),
            ]);
        }
    }
    Ok(t)
}

fn scan(c: &Common) -> CliResult<Table> {
    let (g, _) = load_inputs(c, false)?;
    let window = parse_window(c)?;
    let mut cfg = ScanConfig::new(window, positive_step(c.step.unwrap_or_else(|| default_step(&g)))?)?;
    cfg.accept_tol = tolerances(c)?.accept_tol;
    let mut t = Table::new(&["lambda_star", "kind", "sigma_min"]);
    for p in exceptional_scan(&g, &cfg)?.points {
        t.push(vec![num(p.lambda), text(p.kind.name()), num(p.sigma_min)]);
    }
    Ok(t)
}

fn probe(c: &Common) -> CliResult<Table> {
    let (g, f) = load_inputs(c, true)?;
    let mut t = Table::new(&["lambda_star", "classification", "pole", "background"]);
    for lam in lambdas(c)? {
        if lam.im != 0.0 {
            return Err(input_error(format!("probe points must be real, got {}", format_complex(lam))));
        }
        let p = embedded_probe(&g, &f, lam.re, &ladder(c)?)?;
        let class = match p.classification {
            Classification::EmbeddedEigenvalue => "embedded_eigenvalue",
            Classification::Regular => "regular",
        };
        t.push(vec![num(lam.re), text(class), num(p.pole), num(p.background)]);
    }
    Ok(t)
}

/// Runs a parsed command, writing output to `--out` or stdout.
pub fn run(cli: &Cli) -> CliResult<()> {
    let (c, table) = match &cli.command {
        Command::Validate(c) => (c, validate(c)?),
        Command::Spectrum(c) => (c, spectrum(c)?),
        Command::Dtn(c) => (c, dtn(c)?),
        Command::Resolvent(c) => (c, resolvent(c)?),
        Command::LapSweep(c) => (c, lap(c)?),
        Command::Scan(c) => (c, scan(c)?),
        Command::Probe(c) => (c, probe(c)?),
    };
    let rendered = table.render(c.format);
    match &c.out {
        Some(path) => fs::write(path, rendered).map_err(|e| io_error(path, e)),
        None => std::io::stdout()
            .lock()
            .write_all(rendered.as_bytes())
            .map_err(|e| io_error(Path::new("<stdout>"), e)),
    }
}

/// Entry point for the binary; returns the process exit status.
pub fn main_with_args(args: impl IntoIterator<Item = std::ffi::OsString>) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {}", e.message);
            e.code
        }
    }
}
