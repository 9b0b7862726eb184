//! Command-line front end.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::Value;

use crate::closed_forms::{closed_form_for, compare_with_solver, ClosedFormComparison};
use crate::energy::{radial_energy, EnergyBreakdown};
use crate::error::{Error, Result};
use crate::extremal::{geometric_grid, solve, ExtremalSolution, MIN_SAMPLES};
use crate::io::{format_float, profile_csv_string, read_profile_csv_path, to_json};
use crate::metric::{AnnulusPair, MetricSpec, Weights};
use crate::nitsche::{classify, nitsche_bound_detailed, Regime};
use crate::variation::{verify_with, PerturbationOptions, VerificationReport, VerifyOptions};

pub const EXIT_VERIFY_FAILED: i32 = 1;
pub const EXIT_PARSE: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_NUMERICAL: i32 = 4;

#[derive(Debug, Parser)]
#[command(name = "annulus-extremal", version, about = "Extremal radial maps between annuli for weighted combined energies")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Admissibility bound r_max and, given r, feasibility and regime.
    Bound(BoundArgs),
    /// Solve for α and the extremal profile.
    Solve(InstanceArgs),
    /// Solve, then check residuals, duality and perturbations against thresholds.
    Verify(VerifyArgs),
    /// Energy of a profile read from CSV.
    Energy(EnergyArgs),
    /// Cartesian sweep over parameter lists, one row per instance.
    Sweep(SweepArgs),
    /// Explicit minimizer for const or power metrics and its gap to the solver.
    #[command(name = "closed-form")]
    ClosedForm(InstanceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    pub format: Format,
    /// Write to this file instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args)]
pub struct BoundArgs {
    /// `const`, `power:<lambda>` or `table:<path>`.
    #[arg(long, default_value = "const")]
    pub metric: String,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long = "R")]
    pub big_r: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct InstanceArgs {
    #[arg(long, default_value = "const")]
    pub metric: String,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    #[arg(long)]
    pub r: f64,
    #[arg(long = "R")]
    pub big_r: f64,
    #[arg(long, default_value_t = 512, value_parser = parse_samples)]
    pub samples: usize,
    /// Largest accepted relative boundary mismatch |q(R) − r|/r.
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    pub instance: InstanceArgs,
    /// Radial grid size for perturbation energies.
    #[arg(long, default_value_t = 1025)]
    pub grid_t: usize,
    /// Angular grid size for perturbation energies.
    #[arg(long, default_value_t = 64)]
    pub grid_theta: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EnergyArgs {
    #[arg(long, default_value = "const")]
    pub metric: String,
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    #[arg(long, default_value_t = 1.0)]
    pub b: f64,
    /// CSV with header `t,H,Hdot`.
    #[arg(long)]
    pub profile: PathBuf,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Repeat for several metrics.
    #[arg(long, default_value = "const")]
    pub metric: Vec<String>,
    /// Comma list or `start:stop:count`.
    #[arg(long, default_value = "1")]
    pub a: String,
    #[arg(long, default_value = "1")]
    pub b: String,
    #[arg(long)]
    pub r: String,
    #[arg(long = "R")]
    pub big_r: String,
    #[arg(long, default_value_t = 512, value_parser = parse_samples)]
    pub samples: usize,
    #[arg(long, default_value_t = 1e-10)]
    pub tol: f64,
    #[arg(long, value_enum, default_value = "csv")]
    pub format: Format,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Exit code and captured streams of one invocation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliOutcome {
    pub code: i32,
    pub stdout: String,
    pub stderr: String,
}

/// Exit code for an error raised while running a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Parse(_) | Error::InvalidParameter(_) | Error::NonMonotone { .. } | Error::NonPositive { .. } | Error::Io(_) => EXIT_PARSE,
        Error::Infeasible { .. } | Error::InfeasibleCase(_) => EXIT_INFEASIBLE,
        _ => EXIT_NUMERICAL,
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidParameter(_) => "invalid_parameter",
        Error::OutOfDomain { .. } => "out_of_domain",
        Error::NonPositive { .. } => "non_positive",
        Error::NonFiniteIntegrand { .. } => "non_finite_integrand",
        Error::SingularIntegrand { .. } => "singular_integrand",
        Error::Infeasible { .. } => "infeasible",
        Error::BracketFailure { .. } => "bracket_failure",
        Error::NoConvergence { .. } => "no_convergence",
        Error::DegenerateGrid(_) => "degenerate_grid",
        Error::NonMonotone { .. } => "non_monotone",
        Error::InfeasibleCase(_) => "infeasible_case",
        Error::LambdaOne => "lambda_one",
        Error::BoundaryMismatch { .. } => "boundary_mismatch",
        Error::Parse(_) => "parse",
        Error::Io(_) => "io",
    }
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
    exit_code: i32,
}

#[derive(Serialize)]
struct ErrorDocument<'a> {
    error: ErrorBody<'a>,
}

fn error_json(kind: &str, message: String, exit_code: i32) -> String {
    let doc = ErrorDocument { error: ErrorBody { kind, message, exit_code } };
    to_json(&doc).unwrap_or_else(|_| format!("{{\"error\":{{\"kind\":\"{kind}\",\"exit_code\":{exit_code}}}}}\n"))
}

fn failure(e: &Error) -> CliOutcome {
    let code = exit_code(e);
    CliOutcome { code, stdout: String::new(), stderr: error_json(error_kind(e), e.to_string(), code) }
}

/// Parses `args` (program name first) and runs the command.
pub fn run_cli<I, T>(args: I) -> CliOutcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand => {
                    CliOutcome { code: 0, stdout: e.to_string(), stderr: String::new() }
                }
                _ => CliOutcome { code: EXIT_PARSE, stdout: String::new(), stderr: error_json("usage", e.to_string().trim_end().to_string(), EXIT_PARSE) },
            };
        }
    };
    run(&cli.command)
}

/// Runs a parsed command.
pub fn run(cmd: &Command) -> CliOutcome {
    let (result, out) = match cmd {
        Command::Bound(a) => (cmd_bound(a), &a.output.out),
        Command::Solve(a) => (cmd_solve(a), &a.output.out),
        Command::Verify(a) => (cmd_verify(a), &a.instance.output.out),
        Command::Energy(a) => (cmd_energy(a), &a.output.out),
        Command::Sweep(a) => (cmd_sweep(a), &a.out),
        Command::ClosedForm(a) => (cmd_closed_form(a), &a.output.out),
    };
    match result {
        Ok((code, text)) => match out {
            Some(path) => match std::fs::write(path, &text) {
                Ok(()) => CliOutcome { code, stdout: String::new(), stderr: String::new() },
                Err(e) => failure(&Error::from(e)),
            },
            None => CliOutcome { code, stdout: text, stderr: String::new() },
        },
        Err(e) => failure(&e),
    }
}

fn parse_samples(text: &str) -> std::result::Result<usize, String> {
    let n: usize = text.parse().map_err(|e| format!("{e}"))?;
    if n < MIN_SAMPLES {
        return Err(format!("need at least {MIN_SAMPLES} samples"));
    }
    Ok(n)
}

fn parse_metric(text: &str) -> Result<MetricSpec> {
    MetricSpec::parse(text)
}

fn parse_weights(a: f64, b: f64) -> Result<Weights> {
    Weights::new(a, b).map_err(|e| Error::Parse(e.to_string()))
}

fn parse_annulus(r: f64, big_r: f64) -> Result<AnnulusPair> {
    AnnulusPair::new(r, big_r).map_err(|e| Error::Parse(e.to_string()))
}

/// Comma list of reals, or `start:stop:count` for evenly spaced values.
pub fn parse_list(text: &str) -> Result<Vec<f64>> {
    let bad = |s: &str| Error::Parse(format!("bad number `{s}` in list `{text}`"));
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad(s));
    let parts: Vec<&str> = text.split(':').collect();
    let out = match parts.as_slice() {
        [single] => single.split(',').filter(|s| !s.trim().is_empty()).map(num).collect::<Result<Vec<_>>>()?,
        [start, stop, count] => {
            let (lo, hi) = (num(start)?, num(stop)?);
            let n: usize = count.trim().parse().map_err(|_| bad(count))?;
            match n {
                0 => Vec::new(),
                1 => vec![lo],
                n => (0..n).map(|i| if i == n - 1 { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 }).collect(),
            }
        }
        _ => return Err(Error::Parse(format!("list `{text}` must be `v1,v2,...` or `start:stop:count`"))),
    };
    if out.is_empty() {
        return Err(Error::Parse(format!("list `{text}` is empty")));
    }
    Ok(out)
}

/// Flattens a JSON object into `field,value` rows; arrays are skipped.
fn key_value_csv(v: &Value) -> Result<String> {
    fn walk(prefix: &str, v: &Value, rows: &mut Vec<(String, String)>) {
        match v {
            Value::Object(map) => {
                for (k, x) in map {
                    let key = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                    walk(&key, x, rows);
                }
            }
            Value::Array(_) => {}
            Value::Null => rows.push((prefix.to_string(), String::new())),
            Value::Bool(b) => rows.push((prefix.to_string(), b.to_string())),
            Value::Number(n) => rows.push((prefix.to_string(), n.as_f64().filter(|_| n.is_f64()).map_or_else(|| n.to_string(), format_float))),
            Value::String(s) => rows.push((prefix.to_string(), s.clone())),
        }
    }
    let mut rows = Vec::new();
    walk("", v, &mut rows);
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["field", "value"])?;
    for (k, x) in rows {
        w.write_record([k, x])?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn render<T: Serialize>(doc: &T, format: Format) -> Result<String> {
    match format {
        Format::Json => to_json(doc),
        Format::Csv => key_value_csv(&serde_json::to_value(doc)?),
    }
}

#[derive(Debug, Serialize)]
struct BoundDocument {
    metric: String,
    a: f64,
    b: f64,
    r: Option<f64>,
    #[serde(rename = "R")]
    big_r: f64,
    alpha0: f64,
    s_star: f64,
    r_max: f64,
    divergent: bool,
    bound_converged: bool,
    feasible: Option<bool>,
    regime: Option<Regime>,
    alpha: Option<f64>,
    critical: Option<bool>,
}

fn cmd_bound(args: &BoundArgs) -> Result<(i32, String)> {
    let m = parse_metric(&args.metric)?;
    let w = parse_weights(args.a, args.b)?;
    if !(args.big_r.is_finite() && args.big_r > 1.0) {
        return Err(Error::Parse(format!("R must exceed 1, got {}", args.big_r)));
    }
    let est = nitsche_bound_detailed(&m, &w, args.big_r)?;
    let (alpha0, s_star) = crate::nitsche::alpha0(&m, &w, args.big_r)?;
    let mut doc = BoundDocument {
        metric: args.metric.clone(),
        a: args.a,
        b: args.b,
        r: args.r,
        big_r: args.big_r,
        alpha0,
        s_star,
        r_max: est.r_max,
        divergent: est.divergent,
        bound_converged: est.converged,
        feasible: None,
        regime: None,
        alpha: None,
        critical: None,
    };
    if let Some(r) = args.r {
        let rep = classify(&m, &w, &parse_annulus(r, args.big_r)?)?;
        doc.feasible = Some(rep.feasible);
        doc.regime = Some(rep.regime);
        doc.alpha = rep.alpha;
        doc.critical = Some(rep.critical);
    }
    Ok((0, render(&doc, args.output.format)?))
}

fn solve_instance(args: &InstanceArgs) -> Result<(MetricSpec, Weights, ExtremalSolution)> {
    let m = parse_metric(&args.metric)?;
    let w = parse_weights(args.a, args.b)?;
    let ann = parse_annulus(args.r, args.big_r)?;
    if !(args.tol.is_finite() && args.tol > 0.0) {
        return Err(Error::Parse(format!("tol must be positive, got {}", args.tol)));
    }
    let sol = solve(&m, &w, &ann, args.samples)?;
    if !(sol.boundary_residual <= args.tol) {
        return Err(Error::BoundaryMismatch { residual: sol.boundary_residual, tol: args.tol });
    }
    Ok((m, w, sol))
}

fn cmd_solve(args: &InstanceArgs) -> Result<(i32, String)> {
    let (_, _, sol) = solve_instance(args)?;
    let text = match args.output.format {
        Format::Json => to_json(&sol)?,
        Format::Csv => profile_csv_string(&sol.profile)?,
    };
    Ok((0, text))
}

#[derive(Debug, Serialize)]
struct VerifyDocument<'a> {
    metric: &'a str,
    a: f64,
    b: f64,
    r: f64,
    #[serde(rename = "R")]
    big_r: f64,
    alpha: f64,
    alpha0: f64,
    regime: Regime,
    critical: bool,
    #[serde(flatten)]
    report: &'a VerificationReport,
}

fn cmd_verify(args: &VerifyArgs) -> Result<(i32, String)> {
    let inst = &args.instance;
    let (m, w, sol) = solve_instance(inst)?;
    let opts = VerifyOptions {
        perturbation: PerturbationOptions { n_t: args.grid_t, n_theta: args.grid_theta, ..Default::default() },
        ..Default::default()
    };
    let report = verify_with(&m, &w, &sol, &opts)?;
    let doc = VerifyDocument {
        metric: &inst.metric,
        a: sol.a,
        b: sol.b,
        r: sol.r,
        big_r: sol.big_r,
        alpha: sol.alpha,
        alpha0: sol.alpha0,
        regime: sol.regime,
        critical: sol.critical,
        report: &report,
    };
    let text = match inst.output.format {
        Format::Json => to_json(&doc)?,
        Format::Csv => checks_csv(&report)?,
    };
    Ok((if report.passed { 0 } else { EXIT_VERIFY_FAILED }, text))
}

fn checks_csv(rep: &VerificationReport) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["check", "value", "threshold", "pass"])?;
    for c in &rep.checks {
        w.write_record([c.name.clone(), format_float(c.value), c.threshold.clone(), c.pass.to_string()])?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

#[derive(Debug, Serialize)]
struct EnergyDocument<'a> {
    metric: &'a str,
    a: f64,
    b: f64,
    r: f64,
    #[serde(flatten)]
    energy: EnergyBreakdown,
}

fn cmd_energy(args: &EnergyArgs) -> Result<(i32, String)> {
    let m = parse_metric(&args.metric)?;
    let w = parse_weights(args.a, args.b)?;
    let p = read_profile_csv_path(&args.profile)?;
    let energy = radial_energy(&m, &w, &p)?;
    let doc = EnergyDocument { metric: &args.metric, a: args.a, b: args.b, r: p.r(), energy };
    Ok((0, render(&doc, args.output.format)?))
}

/// One row of a sweep.
#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub metric: String,
    pub a: f64,
    pub b: f64,
    pub r: f64,
    #[serde(rename = "R")]
    pub big_r: f64,
    /// `ok`, `infeasible` or `error`.
    pub status: String,
    pub alpha: Option<f64>,
    pub energy: Option<f64>,
    pub distortion: Option<f64>,
    pub regime: Option<Regime>,
}

fn sweep_row(metric: &str, m: &Result<MetricSpec>, a: f64, b: f64, r: f64, big_r: f64, samples: usize, tol: f64) -> SweepRow {
    let mut row = SweepRow {
        metric: metric.to_string(),
        a,
        b,
        r,
        big_r,
        status: "error".into(),
        alpha: None,
        energy: None,
        distortion: None,
        regime: None,
    };
    let solved = m.clone().and_then(|m| {
        let w = Weights::new(a, b)?;
        let ann = AnnulusPair::new(r, big_r)?;
        solve(&m, &w, &ann, samples)
    });
    match solved {
        Ok(sol) if sol.boundary_residual <= tol => {
            row.status = "ok".into();
            row.alpha = Some(sol.alpha);
            row.energy = Some(sol.energy);
            row.distortion = Some(sol.distortion);
            row.regime = Some(sol.regime);
        }
        Ok(_) => {}
        Err(Error::Infeasible { .. }) => {
            row.status = "infeasible".into();
            row.regime = Some(Regime::Infeasible);
        }
        Err(_) => {}
    }
    row
}

/// Solves every grid point in parallel; rows come back sorted by `(metric, a, b, r, R)`.
pub fn sweep(metrics: &[String], a: &[f64], b: &[f64], r: &[f64], big_r: &[f64], samples: usize, tol: f64) -> Vec<SweepRow> {
    let parsed: Vec<(String, Result<MetricSpec>)> = metrics.iter().map(|t| (t.clone(), parse_metric(t))).collect();
    let mut jobs = Vec::new();
    for (text, m) in &parsed {
        for &a in a {
            for &b in b {
                for &r in r {
                    for &big_r in big_r {
                        jobs.push((text.as_str(), m, a, b, r, big_r));
                    }
                }
            }
        }
    }
    let mut rows: Vec<SweepRow> = jobs.par_iter().map(|&(t, m, a, b, r, big_r)| sweep_row(t, m, a, b, r, big_r, samples, tol)).collect();
    rows.sort_by(|x, y| {
        x.metric
            .cmp(&y.metric)
            .then(x.a.total_cmp(&y.a))
            .then(x.b.total_cmp(&y.b))
            .then(x.r.total_cmp(&y.r))
            .then(x.big_r.total_cmp(&y.big_r))
    });
    rows
}

fn sweep_csv(rows: &[SweepRow]) -> Result<String> {
    let opt = |v: Option<f64>| v.map(format_float).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["metric", "a", "b", "r", "R", "status", "alpha", "energy", "distortion", "regime"])?;
    for row in rows {
        w.write_record([
            row.metric.clone(),
            format_float(row.a),
            format_float(row.b),
            format_float(row.r),
            format_float(row.big_r),
            row.status.clone(),
            opt(row.alpha),
            opt(row.energy),
            opt(row.distortion),
            row.regime.map(|g| g.to_string()).unwrap_or_default(),
        ])?;
    }
    let buf = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
    String::from_utf8(buf).map_err(|e| Error::Io(e.to_string()))
}

fn cmd_sweep(args: &SweepArgs) -> Result<(i32, String)> {
    for m in &args.metric {
        parse_metric(m)?;
    }
    let (a, b, r, big_r) = (parse_list(&args.a)?, parse_list(&args.b)?, parse_list(&args.r)?, parse_list(&args.big_r)?);
    let rows = sweep(&args.metric, &a, &b, &r, &big_r, args.samples, args.tol);
    let text = match args.format {
        Format::Json => to_json(&rows)?,
        Format::Csv => sweep_csv(&rows)?,
    };
    Ok((0, text))
}

#[derive(Debug, Serialize)]
struct ClosedFormDocument<'a> {
    metric: &'a str,
    comparison: &'a ClosedFormComparison,
    profile: crate::extremal::RadialProfile,
}

fn cmd_closed_form(args: &InstanceArgs) -> Result<(i32, String)> {
    let m = parse_metric(&args.metric)?;
    let w = parse_weights(args.a, args.b)?;
    let ann = parse_annulus(args.r, args.big_r)?;
    let case = closed_form_for(&m, &w, &ann)?;
    let profile = case.profile_on(&geometric_grid(1.0, args.r, args.samples)?)?;
    let text = match args.output.format {
        Format::Json => {
            let comparison = compare_with_solver(&case, args.samples)?;
            to_json(&ClosedFormDocument { metric: &args.metric, comparison: &comparison, profile })?
        }
        Format::Csv => profile_csv_string(&profile)?,
    };
    Ok((0, text))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn list_forms() {
        assert_eq!(parse_list("1,2.5").unwrap(), vec![1.0, 2.5]);
        assert_eq!(parse_list("1:2:3").unwrap(), vec![1.0, 1.5, 2.0]);
        assert!(parse_list("1,x").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Parse("x".into())), 2);
        assert_eq!(exit_code(&Error::Infeasible { r: 3.0, r_max: 2.0 }), 3);
        assert_eq!(exit_code(&Error::NoConvergence { iterations: 5 }), 4);
    }

    #[test]
    fn usage_error_is_json() {
        let out = run_cli(["annulus-extremal", "solve", "--r", "x", "--R", "2"]);
        assert_eq!(out.code, 2);
        let v: Value = serde_json::from_str(&out.stderr).unwrap();
        assert_eq!(v["error"]["kind"], "usage");
    }
}
