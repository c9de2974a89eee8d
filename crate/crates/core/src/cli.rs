//! Command-line driver behind the `busymax` binary.
//!
//! Machine formats print floats with 17 significant digits, text tables with 6.
//! Exit codes: 0 success, 2 usage error, 3 numeric or convergence error,
//! 4 step cap exceeded.

use std::fs::File;
use std::io::{self, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::asymptotic::{
    moment_expansion_exact, s_0_h_expansion, s_j_h_expansion, variance_expansion_exact,
    AsymptoticError,
};
use crate::exact::{
    brute_force_l_max, brute_force_moment, moment, pmf, tail_probability, ExactError, Tolerance,
    TrafficIntensity,
};
use crate::series::{ConstExpr, HExpansion, LogLaurentSeries, SeriesJson};
use crate::simulate::{simulate_many, RngSeed, SimulateError, SimulationReport, DEFAULT_STEP_CAP};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;
pub const EXIT_STEP_CAP: i32 = 4;

/// Below this `1 - λ` the exact routes and the simulator get very slow.
const SMALL_U_WARNING: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "busymax",
    version,
    about = "Maximum queue length during an M/M/1 busy period"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Text,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    /// Output format; each command has its own default.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write to this file instead of standard output.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct LambdaArgs {
    /// Traffic intensity λ.
    #[arg(long, allow_negative_numbers = true)]
    pub lambda: Option<f64>,
    /// 1 - λ; preferred when λ is very close to one.
    #[arg(long, allow_negative_numbers = true)]
    pub u: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Exact,
    Brute,
    Asymptotic,
    Simulate,
    All,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tail probabilities and pmf of L for l = 0..=lmax.
    Dist {
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        lmax: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Ex[L^k] by one route or all of them.
    Moment {
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long)]
        k: u32,
        #[arg(long, value_enum, default_value = "exact")]
        method: Method,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Truncation order in 1-λ of the asymptotic route.
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        order: i32,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Heavy-traffic expansion of a moment, the variance, or a Lambert sum.
    Expand {
        #[command(flatten)]
        target: ExpandTarget,
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        order: i32,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Exact against asymptotic (and optionally simulated) moments over a grid.
    Compare {
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 4, allow_negative_numbers = true)]
        order: i32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        /// Adds a simulation column with this many busy periods per point.
        #[arg(long)]
        samples: Option<u64>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
    /// Raw simulation summary.
    Simulate {
        #[command(flatten)]
        lambda: LambdaArgs,
        #[arg(long, default_value_t = 100_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = DEFAULT_STEP_CAP)]
        step_cap: u64,
        #[command(flatten)]
        out: OutputArgs,
    },
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct ExpandTarget {
    /// Ex[L^k].
    #[arg(long)]
    pub k: Option<u32>,
    /// Var[L].
    #[arg(long)]
    pub variance: bool,
    /// The Lambert sum S_j in powers of h = -log λ.
    #[arg(long = "s_j", alias = "s-j")]
    pub s_j: Option<u32>,
}

#[derive(Debug, Clone, Args)]
#[group(required = true, multiple = false)]
pub struct GridArgs {
    /// Comma-separated λ values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub lambda_grid: Option<Vec<f64>>,
    /// Comma-separated 1-λ values.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    pub u_grid: Option<Vec<f64>>,
}

/// Error carrying its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_NUMERIC,
            message: message.into(),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::numeric(format!("output error: {e}"))
    }
}

fn exact_error(context: &str, e: ExactError) -> CliError {
    let code = match e {
        ExactError::LambdaOutOfRange(_)
        | ExactError::Supercritical(_)
        | ExactError::Critical
        | ExactError::InvalidTolerance(_)
        | ExactError::InvalidArgument(_) => EXIT_USAGE,
        _ => EXIT_NUMERIC,
    };
    CliError {
        code,
        message: format!("{context}: {e}"),
    }
}

fn asymptotic_error(context: &str, e: AsymptoticError) -> CliError {
    let code = match e {
        AsymptoticError::InvalidArgument(_) => EXIT_USAGE,
        AsymptoticError::Exact(inner) => return exact_error(context, inner),
        _ => EXIT_NUMERIC,
    };
    CliError {
        code,
        message: format!("{context}: {e}"),
    }
}

fn simulate_error(context: &str, e: SimulateError) -> CliError {
    let code = match e {
        SimulateError::InvalidArgument(_) => EXIT_USAGE,
        SimulateError::StepCapExceeded { .. } => EXIT_STEP_CAP,
        SimulateError::Overflow => EXIT_NUMERIC,
    };
    CliError {
        code,
        message: format!("{context}: {e}"),
    }
}

/// 17 significant digits.
pub fn fmt_machine(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

/// 6 significant digits, fixed notation for moderate magnitudes.
pub fn fmt_human(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return x.to_string();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..6).contains(&exp) {
        let decimals = (5 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        format!("{x:.5e}")
    }
}

fn parse_lambda(args: &LambdaArgs, allow_critical: bool) -> Result<TrafficIntensity, CliError> {
    let t = match (args.lambda, args.u) {
        (Some(l), None) => {
            if l > 1.0 {
                return Err(CliError::usage(format!(
                    "λ = {l} > 1: the queue is unstable and the busy period is infinite with positive probability, so its maximum is undefined"
                )));
            }
            if allow_critical {
                TrafficIntensity::with_critical(l)
            } else {
                TrafficIntensity::new(l)
            }
        }
        (None, Some(u)) => {
            if u == 0.0 && allow_critical {
                TrafficIntensity::with_critical(1.0)
            } else if u < 0.0 {
                return Err(CliError::usage(format!(
                    "u = {u} < 0 means λ > 1: the busy period is infinite with positive probability"
                )));
            } else {
                TrafficIntensity::from_u(u)
            }
        }
        _ => return Err(CliError::usage("give exactly one of --lambda and --u")),
    };
    t.map_err(|e| CliError::usage(e.to_string()))
}

fn tolerance(tol: f64) -> Result<Tolerance, CliError> {
    Tolerance::new(tol).map_err(|e| CliError::usage(e.to_string()))
}

fn warn_small_u(t: TrafficIntensity, err: &mut dyn Write) -> io::Result<()> {
    if !t.is_critical() && t.u() < SMALL_U_WARNING {
        writeln!(
            err,
            "warning: 1-λ = {:e} is very small; the exact and brute routes sum on the order of 1/(1-λ) terms and simulated busy periods get very long",
            t.u()
        )?;
    }
    Ok(())
}

fn csv_string(header: &[&str], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let io_err = |e: csv::Error| CliError::numeric(format!("csv error: {e}"));
    w.write_record(header).map_err(io_err)?;
    for r in rows {
        w.write_record(r).map_err(io_err)?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::numeric(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| CliError::numeric(e.to_string()))
}

fn text_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for r in rows {
        for (w, cell) in widths.iter_mut().zip(r) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: Vec<&str>| {
        let padded: Vec<String> = cells
            .iter()
            .zip(&widths)
            .map(|(c, &w)| format!("{c:>w$}"))
            .collect();
        padded.join("  ").trim_end().to_string() + "\n"
    };
    let mut out = line(header.to_vec());
    for r in rows {
        out.push_str(&line(r.iter().map(String::as_str).collect()));
    }
    out
}

fn json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map(|s| s + "\n")
        .map_err(|e| CliError::numeric(format!("json error: {e}")))
}

fn emit(out: &OutputArgs, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match &out.output {
        Some(path) => File::create(path)?.write_all(text.as_bytes())?,
        None => stdout.write_all(text.as_bytes())?,
    }
    Ok(())
}

/// A table with typed cells, rendered per format.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<Cell>>,
}

#[derive(Clone)]
enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
    Empty,
}

impl Cell {
    fn opt(x: Option<f64>) -> Cell {
        x.map_or(Cell::Empty, Cell::Real)
    }

    fn render(&self, human: bool) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Real(x) if human => fmt_human(*x),
            Cell::Real(x) => fmt_machine(*x),
            Cell::Text(s) => s.clone(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Int(i) => serde_json::Value::from(*i),
            Cell::Real(x) => serde_json::Number::from_f64(*x)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Text(s) => serde_json::Value::from(s.as_str()),
            Cell::Empty => serde_json::Value::Null,
        }
    }
}

impl Table {
    fn render(&self, format: Format) -> Result<String, CliError> {
        let cells = |human: bool| -> Vec<Vec<String>> {
            self.rows
                .iter()
                .map(|r| r.iter().map(|c| c.render(human)).collect())
                .collect()
        };
        match format {
            Format::Csv => csv_string(&self.header, &cells(false)),
            Format::Text => Ok(text_table(&self.header, &cells(true))),
            Format::Json => {
                let rows: Vec<serde_json::Map<String, serde_json::Value>> = self
                    .rows
                    .iter()
                    .map(|r| {
                        self.header
                            .iter()
                            .zip(r)
                            .map(|(h, c)| (h.to_string(), c.json()))
                            .collect()
                    })
                    .collect();
                json_string(&rows)
            }
        }
    }
}

fn cmd_dist(lambda: &LambdaArgs, lmax: u64, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let t = parse_lambda(lambda, true)?;
    let mut rows = Vec::new();
    for l in 0..=lmax {
        let p = if l == 0 {
            0.0
        } else {
            pmf(t, l).map_err(|e| exact_error("dist", e))?
        };
        rows.push(vec![Cell::Int(l), Cell::Real(tail_probability(t, l)), Cell::Real(p)]);
    }
    let table = Table {
        header: vec!["l", "tail", "pmf"],
        rows,
    };
    emit(out, &table.render(out.format.unwrap_or(Format::Csv))?, stdout)
}

struct MomentParams {
    k: u32,
    tol: Tolerance,
    order: i32,
    samples: u64,
    seed: u64,
    step_cap: u64,
}

/// One route's value and standard error, or its error.
fn moment_by(method: Method, t: TrafficIntensity, p: &MomentParams) -> Result<(f64, Option<f64>), CliError> {
    match method {
        Method::Exact => moment(p.k, t, p.tol)
            .map(|v| (v, None))
            .map_err(|e| exact_error("moment (method exact)", e)),
        Method::Brute => {
            let context = "moment (method brute)";
            let l_max = brute_force_l_max(p.k, t, p.tol).map_err(|e| exact_error(context, e))?;
            brute_force_moment(p.k, t, l_max, p.tol)
                .map(|v| (v, None))
                .map_err(|e| exact_error(context, e))
        }
        Method::Asymptotic => {
            let context = "moment (method asymptotic)";
            if t.is_critical() {
                return Err(exact_error(context, ExactError::Critical));
            }
            moment_expansion_exact(p.k, p.order)
                .map(|s| (s.to_real().evaluate(t), None))
                .map_err(|e| asymptotic_error(context, e))
        }
        Method::Simulate => {
            let context = "moment (method simulate)";
            if !(1..=4).contains(&p.k) {
                return Err(CliError::usage(format!(
                    "{context}: simulation tracks moments k = 1..=4 only"
                )));
            }
            let s = simulate_many(t, p.samples, RngSeed(p.seed), p.step_cap)
                .map_err(|e| simulate_error(context, e))?;
            let k = p.k as usize;
            let stderr = (k <= 2).then(|| s.stderr_moment(k));
            Ok((s.raw_moment(k), stderr))
        }
        Method::All => unreachable!("expanded by the caller"),
    }
}

fn cmd_moment(
    lambda: &LambdaArgs,
    method: Method,
    params: MomentParams,
    out: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let t = parse_lambda(lambda, false)?;
    if params.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    warn_small_u(t, stderr)?;
    let methods = match method {
        Method::All => vec![Method::Exact, Method::Brute, Method::Asymptotic, Method::Simulate],
        m => vec![m],
    };
    let mut rows = Vec::new();
    for m in &methods {
        let name = m.to_possible_value().expect("named variant").get_name().to_string();
        let (value, se, error) = match moment_by(*m, t, &params) {
            Ok((v, se)) => (Cell::Real(v), Cell::opt(se), Cell::Empty),
            Err(e) if methods.len() == 1 => return Err(e),
            Err(e) => (Cell::Empty, Cell::Empty, Cell::Text(e.message)),
        };
        rows.push(vec![
            Cell::Text(name),
            Cell::Int(u64::from(params.k)),
            Cell::Real(t.lambda()),
            Cell::Real(t.u()),
            value,
            se,
            error,
        ]);
    }
    let table = Table {
        header: vec!["method", "k", "lambda", "u", "value", "stderr", "error"],
        rows,
    };
    emit(out, &table.render(out.format.unwrap_or(Format::Csv))?, stdout)
}

fn series_csv(series: &LogLaurentSeries<ConstExpr>) -> Result<String, CliError> {
    let rows: Vec<Vec<String>> = series
        .terms()
        .map(|(power, p)| {
            let p = p.to_real();
            vec![
                power.to_string(),
                fmt_machine(p.coeff(0)),
                fmt_machine(p.coeff(1)),
                fmt_machine(p.coeff(2)),
            ]
        })
        .collect();
    csv_string(&["power", "log0", "log1", "log2"], &rows)
}

fn h_table_csv(table: &HExpansion) -> Result<String, CliError> {
    let json = table.to_json();
    let mut rows = Vec::new();
    if let Some(q) = &json.log_over_h {
        rows.push(vec!["-1".into(), format!("({q})·log(1/(1-λ))"), String::new()]);
    }
    for t in &json.terms {
        rows.push(vec![t.power.to_string(), t.exact.clone(), fmt_machine(t.value)]);
    }
    csv_string(&["power", "exact", "value"], &rows)
}

fn series_text(title: &str, series: &LogLaurentSeries<ConstExpr>) -> String {
    format!(
        "{title}\n  {}\n\nNumerically:\n  {}\n",
        series,
        series.to_real().render(&|c: &f64| fmt_human(*c))
    )
}

fn cmd_expand(target: &ExpandTarget, order: i32, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let format = out.format.unwrap_or(Format::Text);
    let text = if let Some(j) = target.s_j {
        let context = "expand --s_j";
        if order < 1 {
            return Err(CliError::usage(format!("{context}: --order must be at least 1")));
        }
        let table = if j == 0 {
            s_0_h_expansion(order as usize)
        } else {
            s_j_h_expansion(j, order as usize)
        }
        .map_err(|e| asymptotic_error(context, e))?;
        match format {
            Format::Json => json_string(&table.to_json())?,
            Format::Csv => h_table_csv(&table)?,
            Format::Text => format!("S_{j}(λ) as h = -log λ → 0:\n  {table}\n"),
        }
    } else {
        let (title, series) = if target.variance {
            let s = variance_expansion_exact(order).map_err(|e| asymptotic_error("expand --variance", e))?;
            ("Var[L] as λ → 1:".to_string(), s)
        } else {
            let k = target.k.expect("clap enforces one target");
            let s = moment_expansion_exact(k, order).map_err(|e| asymptotic_error("expand --k", e))?;
            (format!("Ex[L^{k}] as λ → 1:"), s)
        };
        match format {
            Format::Json => json_string(&SeriesJson::from(&series))?,
            Format::Csv => series_csv(&series)?,
            Format::Text => series_text(&title, &series),
        }
    };
    emit(out, &text, stdout)
}

struct CompareParams {
    k: u32,
    order: i32,
    tol: Tolerance,
    samples: Option<u64>,
    seed: u64,
    step_cap: u64,
}

fn compare_row(value: f64, is_u: bool, p: &CompareParams) -> Vec<Cell> {
    let t = if is_u {
        TrafficIntensity::from_u(value)
    } else {
        TrafficIntensity::new(value)
    };
    let (lam, u) = if is_u { (1.0 - value, value) } else { (value, 1.0 - value) };
    let mut errors = Vec::new();
    let t = match t {
        Ok(t) => t,
        Err(e) => {
            let mut row = vec![Cell::Real(lam), Cell::Real(u)];
            row.extend(std::iter::repeat_n(Cell::Empty, 6));
            row.push(Cell::Text(e.to_string()));
            return row;
        }
    };
    let exact = moment(p.k, t, p.tol).map_err(|e| errors.push(format!("exact: {e}"))).ok();
    let asym = moment_expansion_exact(p.k, p.order)
        .map(|s| s.to_real().evaluate(t))
        .map_err(|e| errors.push(format!("asymptotic: {e}")))
        .ok();
    let (sim, sim_se) = match p.samples {
        None => (None, None),
        Some(n) if (1..=4).contains(&p.k) => match simulate_many(t, n, RngSeed(p.seed), p.step_cap) {
            Ok(s) => {
                let k = p.k as usize;
                (Some(s.raw_moment(k)), (k <= 2).then(|| s.stderr_moment(k)))
            }
            Err(e) => {
                errors.push(format!("simulate: {e}"));
                (None, None)
            }
        },
        Some(_) => {
            errors.push("simulate: moments k = 1..=4 only".into());
            (None, None)
        }
    };
    let (abs_err, rel_err) = match (exact, asym) {
        (Some(e), Some(a)) => (Some((a - e).abs()), Some((a - e).abs() / e.abs())),
        _ => (None, None),
    };
    vec![
        Cell::Real(t.lambda()),
        Cell::Real(t.u()),
        Cell::opt(exact),
        Cell::opt(asym),
        Cell::opt(sim),
        Cell::opt(sim_se),
        Cell::opt(abs_err),
        Cell::opt(rel_err),
        if errors.is_empty() {
            Cell::Empty
        } else {
            Cell::Text(errors.join("; "))
        },
    ]
}

fn cmd_compare(grid: &GridArgs, params: CompareParams, out: &OutputArgs, stdout: &mut dyn Write) -> Result<(), CliError> {
    let (values, is_u) = match (&grid.lambda_grid, &grid.u_grid) {
        (Some(v), None) => (v.clone(), false),
        (None, Some(v)) => (v.clone(), true),
        _ => return Err(CliError::usage("give exactly one of --lambda-grid and --u-grid")),
    };
    if values.is_empty() {
        return Err(CliError::usage("compare: the grid is empty"));
    }
    if params.k == 0 {
        return Err(CliError::usage("--k must be at least 1"));
    }
    let rows = values.iter().map(|&v| compare_row(v, is_u, &params)).collect();
    let table = Table {
        header: vec![
            "lambda",
            "u",
            "exact",
            "asymptotic",
            "simulate",
            "simulate_stderr",
            "abs_err",
            "rel_err",
            "error",
        ],
        rows,
    };
    emit(out, &table.render(out.format.unwrap_or(Format::Csv))?, stdout)
}

fn cmd_simulate(
    lambda: &LambdaArgs,
    samples: u64,
    seed: u64,
    step_cap: u64,
    out: &OutputArgs,
    stdout: &mut dyn Write,
    stderr: &mut dyn Write,
) -> Result<(), CliError> {
    let t = parse_lambda(lambda, false)?;
    warn_small_u(t, stderr)?;
    let summary = simulate_many(t, samples, RngSeed(seed), step_cap).map_err(|e| simulate_error("simulate", e))?;
    let report = SimulationReport::new(&summary, t, RngSeed(seed));
    let text = match out.format.unwrap_or(Format::Json) {
        Format::Json => json_string(&report)?,
        Format::Csv => {
            let rows: Vec<Vec<String>> = report
                .histogram
                .iter()
                .map(|(l, c)| vec![l.to_string(), c.to_string()])
                .collect();
            csv_string(&["l", "count"], &rows)?
        }
        Format::Text => format!(
            "n = {}, λ = {}, seed = {}\nmean = {} ± {}\nEx[L^2] ≈ {}, Ex[L^3] ≈ {}, Ex[L^4] ≈ {}\nmax observed = {}\n",
            report.n,
            fmt_human(report.lambda),
            report.seed,
            fmt_human(report.mean),
            fmt_human(report.stderr_mean),
            fmt_human(report.m2),
            fmt_human(report.m3),
            fmt_human(report.m4),
            summary.max_observed()
        ),
    };
    emit(out, &text, stdout)
}

/// Executes parsed arguments.
pub fn execute(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), CliError> {
    match cli.command {
        Command::Dist { lambda, lmax, out } => cmd_dist(&lambda, lmax, &out, stdout),
        Command::Moment {
            lambda,
            k,
            method,
            tol,
            order,
            samples,
            seed,
            step_cap,
            out,
        } => {
            let params = MomentParams {
                k,
                tol: tolerance(tol)?,
                order,
                samples,
                seed,
                step_cap,
            };
            cmd_moment(&lambda, method, params, &out, stdout, stderr)
        }
        Command::Expand { target, order, out } => cmd_expand(&target, order, &out, stdout),
        Command::Compare {
            grid,
            k,
            order,
            tol,
            samples,
            seed,
            step_cap,
            out,
        } => {
            let params = CompareParams {
                k,
                order,
                tol: tolerance(tol)?,
                samples,
                seed,
                step_cap,
            };
            cmd_compare(&grid, params, &out, stdout)
        }
        Command::Simulate {
            lambda,
            samples,
            seed,
            step_cap,
            out,
        } => cmd_simulate(&lambda, samples, seed, step_cap, &out, stdout, stderr),
    }
}

/// Parses `args` (program name first), runs, and returns the exit code.
pub fn run<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let target: &mut dyn Write = if e.use_stderr() { stderr } else { stdout };
            let _ = write!(target, "{}", e.render());
            return code;
        }
    };
    match execute(cli, stdout, stderr) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            let _ = writeln!(stderr, "error: {}", e.message);
            e.code
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_ok(args: &[&str]) -> String {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let mut full = vec!["busymax"];
        full.extend_from_slice(args);
        let code = run(full, &mut out, &mut err);
        assert_eq!(code, 0, "{}", String::from_utf8_lossy(&err));
        String::from_utf8(out).unwrap()
    }

    #[test]
    fn machine_floats_round_trip() {
        for x in [1.0 / 3.0, 1e-300, 123456.789, -0.1] {
            let s = fmt_machine(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
        assert_eq!(fmt_machine(0.5), "5.0000000000000000e-1");
    }

    #[test]
    fn human_floats() {
        assert_eq!(fmt_human(1.0 / 3.0), "0.333333");
        assert_eq!(fmt_human(1234.5678), "1234.57");
        assert_eq!(fmt_human(2.0), "2");
        assert_eq!(fmt_human(1.5e-7), "1.50000e-7");
        assert_eq!(fmt_human(-0.25), "-0.25");
    }

    #[test]
    fn dist_rows() {
        let out = run_ok(&["dist", "--lambda", "0.5", "--lmax", "0"]);
        assert_eq!(out, "l,tail,pmf\n0,1.0000000000000000e0,0.0000000000000000e0\n");
        let out = run_ok(&["dist", "--lambda", "1.0", "--lmax", "3", "--format", "text"]);
        assert!(out.contains("0.333333"));
    }

    #[test]
    fn expand_first_moment_text() {
        let out = run_ok(&["expand", "--k", "1", "--order", "2"]);
        assert!(out.contains("[log(1/(1-λ)) + γ]"), "{out}");
    }
}
