//! Command-line front end: `rho-table`, `solve`, `verify` and `sweep`.
//!
//! Exit codes: 0 success, 1 usage or I/O error, 2 the method found no
//! solution, 3 `verify` found a failing hard check.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, CommandFactory, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;

use crate::analysis::{full_report, AnalysisConfig, Classification, SolutionReport};
use crate::error::{Error, SolveError};
use crate::io::{
    check_columns, fmt_f64, read_profile, rho_table_csv, write_atomic, write_json, write_profile,
};
use crate::kinematics::RadialProfile;
use crate::penalty::PenaltySpec;
use crate::solvers::{
    cross_validate, minimize, shoot_delayed, shoot_immediate, Branch, CrossConfig, MinimizeConfig,
    ShootingConfig,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error(transparent)]
    Run(#[from] Error),
    #[error("hard checks failed: {0}")]
    HardCheck(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Run(Error::Solve(e)) if e.is_not_found() => 2,
            CliError::Run(_) => 1,
            CliError::HardCheck(_) => 3,
        }
    }
}

impl From<SolveError> for CliError {
    fn from(e: SolveError) -> Self {
        CliError::Run(e.into())
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "polyrad", version, about = "Radial M-covering stationary points of a polyconvex energy")]
pub struct Cli {
    /// Flat `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Tabulate ρ, ρ′, ρ″ and f over [−s0, 2 s0].
    RhoTable(RhoTableArgs),
    /// Solve for a profile and write it with its report.
    Solve(SolveArgs),
    /// Check an existing profile CSV.
    Verify(VerifyArgs),
    /// Solve over a grid of (M, γ, s0) and summarize one row per run.
    Sweep(SweepArgs),
}

#[derive(Args, Debug)]
struct PenaltyArgs {
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    s0: Option<f64>,
    /// Threshold s̃ of the delayed penalty.
    #[arg(long)]
    delay: Option<f64>,
    /// Replace the penalty by ρ ≡ 0.
    #[arg(long)]
    rho_zero: bool,
}

#[derive(Args, Debug)]
struct MeshArgs {
    /// Number of mesh nodes.
    #[arg(long = "n")]
    nodes: Option<usize>,
    /// First positive mesh radius.
    #[arg(long)]
    eps0: Option<f64>,
    /// Geometric growth factor of the graded part of the mesh.
    #[arg(long)]
    grading: Option<f64>,
}

#[derive(Args, Debug)]
struct RhoTableArgs {
    #[command(flatten)]
    penalty: PenaltyArgs,
    /// Number of intervals; N + 1 rows are written.
    #[arg(long)]
    samples: Option<usize>,
    /// Output CSV, stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    ShootImmediate,
    ShootDelayed,
    Minimize,
    Cross,
}

impl FromStr for Mode {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        <Mode as ValueEnum>::from_str(s, true)
    }
}

impl Mode {
    fn name(self) -> &'static str {
        match self {
            Mode::ShootImmediate => "shoot-immediate",
            Mode::ShootDelayed => "shoot-delayed",
            Mode::Minimize => "minimize",
            Mode::Cross => "cross",
        }
    }
}

#[derive(Args, Debug)]
struct SolverArgs {
    #[command(flatten)]
    mesh: MeshArgs,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    rtol: Option<f64>,
    /// Iteration cap of the root finder or the minimizer.
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    a_lo: Option<f64>,
    #[arg(long)]
    a_hi: Option<f64>,
    #[arg(long)]
    delta_lo: Option<f64>,
    #[arg(long)]
    delta_hi: Option<f64>,
    /// Initial slope at the lift-off radius on the delayed branch.
    #[arg(long)]
    kick: Option<f64>,
    /// Use the exact power law below the penalty threshold.
    #[arg(long, value_name = "BOOL")]
    exact_pre_threshold: Option<bool>,
    /// Gradient tolerance of the minimizer.
    #[arg(long)]
    grad_tol: Option<f64>,
}

#[derive(Args, Debug)]
struct SolveArgs {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[arg(long = "M")]
    m: Option<u32>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[command(flatten)]
    solver: SolverArgs,
    /// Hölder exponent used by the necessary-condition check.
    #[arg(long)]
    alpha: Option<f64>,
    /// Profile CSV; in cross mode the minimizer profile goes next to it.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    report: Option<PathBuf>,
    /// Append residual, zdot and subsol columns to the profile.
    #[arg(long)]
    diagnostics: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[arg(long = "in", value_name = "CSV")]
    input: Option<PathBuf>,
    #[arg(long = "M")]
    m: Option<u32>,
    #[command(flatten)]
    penalty: PenaltyArgs,
    #[arg(long)]
    alpha: Option<f64>,
    /// Relative tolerance between stored and recomputed d, z columns.
    #[arg(long)]
    column_tol: Option<f64>,
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long = "M", value_delimiter = ',')]
    m: Vec<u32>,
    #[arg(long, value_delimiter = ',')]
    gamma: Vec<f64>,
    #[arg(long, value_delimiter = ',')]
    s0: Vec<f64>,
    #[arg(long)]
    delay: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    #[command(flatten)]
    solver: SolverArgs,
    /// Summary CSV, stdout if absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

const KEYS: &[&str] = &[
    "gamma", "s0", "delay", "rho_zero", "m", "mode", "n", "eps0", "grading", "atol", "rtol", "max_iter", "a_lo",
    "a_hi", "delta_lo", "delta_hi", "kick", "exact_pre_threshold", "grad_tol", "alpha", "out", "report",
    "diagnostics", "samples", "in", "column_tol",
];

/// Values from the `--config` file.
#[derive(Debug, Default)]
struct FileConfig {
    path: String,
    values: BTreeMap<String, String>,
}

impl FileConfig {
    fn load(path: Option<&Path>) -> CliResult<Self> {
        let Some(path) = path else {
            return Ok(Self::default());
        };
        let text = std::fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.display().to_string(), source })?;
        Self::parse(&text, &path.display().to_string())
    }

    fn parse(text: &str, path: &str) -> CliResult<Self> {
        let mut values = BTreeMap::new();
        for (k, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!("{path}:{}: expected key = value", k + 1)));
            };
            let key = key.trim().to_lowercase().replace('-', "_");
            if !KEYS.contains(&key.as_str()) {
                return Err(CliError::Usage(format!("{path}:{}: unknown key {key:?}", k + 1)));
            }
            values.insert(key, value.trim().to_string());
        }
        Ok(Self { path: path.to_string(), values })
    }

    fn get<T: FromStr>(&self, key: &str) -> CliResult<Option<T>> {
        match self.values.get(key) {
            None => Ok(None),
            Some(v) => v
                .parse()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("{}: cannot parse {key} = {v:?}", self.path))),
        }
    }

    fn list<T: FromStr>(&self, key: &str) -> CliResult<Vec<T>> {
        let Some(v) = self.values.get(key) else {
            return Ok(Vec::new());
        };
        v.split(',')
            .map(|item| {
                item.trim()
                    .parse()
                    .map_err(|_| CliError::Usage(format!("{}: cannot parse {key} item {item:?}", self.path)))
            })
            .collect()
    }

    fn pick<T: FromStr>(&self, flag: Option<T>, key: &str) -> CliResult<Option<T>> {
        match flag {
            Some(v) => Ok(Some(v)),
            None => self.get(key),
        }
    }

    fn switch(&self, flag: bool, key: &str) -> CliResult<bool> {
        Ok(flag || self.get::<bool>(key)?.unwrap_or(false))
    }
}

fn usage_of(sub: &str) -> String {
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(sub) {
        Some(c) => c.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn required<T>(value: Option<T>, flag: &str, sub: &str) -> CliResult<T> {
    value.ok_or_else(|| CliError::Usage(format!("missing {flag}\n\n{}", usage_of(sub))))
}

fn resolve_penalty(p: &PenaltyArgs, file: &FileConfig, sub: &str) -> CliResult<PenaltySpec> {
    if file.switch(p.rho_zero, "rho_zero")? {
        return Ok(PenaltySpec::zero());
    }
    let gamma = required(file.pick(p.gamma, "gamma")?, "--gamma", sub)?;
    let s0 = required(file.pick(p.s0, "s0")?, "--s0", sub)?;
    let spec = match file.pick(p.delay, "delay")? {
        Some(delay) => PenaltySpec::delayed(gamma, s0, delay),
        None => PenaltySpec::smooth_step(gamma, s0),
    };
    spec.map_err(|e| CliError::Usage(e.to_string()))
}

fn resolve_analysis(alpha: Option<f64>, file: &FileConfig) -> CliResult<AnalysisConfig> {
    let mut cfg = AnalysisConfig::default();
    if let Some(a) = file.pick(alpha, "alpha")? {
        if !(a > 0.0 && a < 1.0) {
            return Err(CliError::Usage(format!("--alpha must lie in (0, 1), got {a}")));
        }
        cfg.alpha = a;
    }
    Ok(cfg)
}

/// Fully resolved solver settings for one run.
#[derive(Clone, Copy, Debug)]
struct SolverSettings {
    nodes: usize,
    eps0: Option<f64>,
    grading: Option<f64>,
    atol: Option<f64>,
    rtol: Option<f64>,
    max_iter: Option<usize>,
    a_bracket: Option<(f64, f64)>,
    delta_bracket: Option<(f64, f64)>,
    kick: Option<f64>,
    exact_pre_threshold: Option<bool>,
    grad_tol: Option<f64>,
}

const DEFAULT_NODES: usize = 2048;

fn resolve_solver(a: &SolverArgs, file: &FileConfig) -> CliResult<SolverSettings> {
    let pair = |lo: Option<f64>, hi: Option<f64>, klo: &str, khi: &str, default: (f64, f64)| -> CliResult<Option<(f64, f64)>> {
        let lo = file.pick(lo, klo)?;
        let hi = file.pick(hi, khi)?;
        Ok(match (lo, hi) {
            (None, None) => None,
            (lo, hi) => Some((lo.unwrap_or(default.0), hi.unwrap_or(default.1))),
        })
    };
    let imm = match Branch::immediate() {
        Branch::Immediate { a_bracket } => a_bracket,
        Branch::Delayed { .. } => unreachable!(),
    };
    let del = match Branch::delayed() {
        Branch::Delayed { delta_bracket } => delta_bracket,
        Branch::Immediate { .. } => unreachable!(),
    };
    Ok(SolverSettings {
        nodes: file.pick(a.mesh.nodes, "n")?.unwrap_or(DEFAULT_NODES),
        eps0: file.pick(a.mesh.eps0, "eps0")?,
        grading: file.pick(a.mesh.grading, "grading")?,
        atol: file.pick(a.atol, "atol")?,
        rtol: file.pick(a.rtol, "rtol")?,
        max_iter: file.pick(a.max_iter, "max_iter")?,
        a_bracket: pair(a.a_lo, a.a_hi, "a_lo", "a_hi", imm)?,
        delta_bracket: pair(a.delta_lo, a.delta_hi, "delta_lo", "delta_hi", del)?,
        kick: file.pick(a.kick, "kick")?,
        exact_pre_threshold: file.pick(a.exact_pre_threshold, "exact_pre_threshold")?,
        grad_tol: file.pick(a.grad_tol, "grad_tol")?,
    })
}

impl SolverSettings {
    fn shooting(&self, m: u32, delayed: bool) -> ShootingConfig {
        let mut cfg = if delayed { ShootingConfig::delayed(m) } else { ShootingConfig::immediate(m) };
        cfg.nodes = self.nodes;
        if let Some(v) = self.eps0 {
            cfg.eps0 = v;
        }
        if let Some(v) = self.grading {
            cfg.grading = v;
        }
        if let Some(v) = self.atol {
            cfg.atol = v;
        }
        if let Some(v) = self.rtol {
            cfg.rtol = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.kick {
            cfg.kick = v;
        }
        if let Some(v) = self.exact_pre_threshold {
            cfg.exact_pre_threshold = v;
        }
        match (&mut cfg.branch, self.a_bracket, self.delta_bracket) {
            (Branch::Immediate { a_bracket }, Some(b), _) => *a_bracket = b,
            (Branch::Delayed { delta_bracket }, _, Some(b)) => *delta_bracket = b,
            _ => {}
        }
        cfg
    }

    fn minimize(&self, m: u32) -> MinimizeConfig {
        let mut cfg = MinimizeConfig::new(m, self.nodes);
        if let Some(v) = self.eps0 {
            cfg.eps0 = v;
        }
        if let Some(v) = self.grading {
            cfg.grading = v;
        }
        if let Some(v) = self.max_iter {
            cfg.max_iterations = v;
        }
        if let Some(v) = self.grad_tol {
            cfg.grad_tol = v;
        }
        cfg
    }

    fn cross(&self, m: u32, analysis: AnalysisConfig) -> CrossConfig {
        let minimize = self.minimize(m);
        let shooting = ShootingConfig {
            nodes: self.nodes - 1,
            eps0: minimize.eps0,
            grading: minimize.grading,
            ..self.shooting(m, false)
        };
        CrossConfig { shooting, minimize, analysis }
    }
}

fn power_start(m: u32) -> crate::error::Result<RadialProfile> {
    RadialProfile::power(m, vec![0.0, 0.25, 0.5, 0.75, 1.0], 1.0)
}

/// One finished single-solver run.
struct Solved {
    profile: RadialProfile,
    report: SolutionReport,
}

fn solve_one(
    spec: &PenaltySpec,
    m: u32,
    mode: Mode,
    settings: &SolverSettings,
    analysis: &AnalysisConfig,
) -> crate::error::Result<Solved> {
    let (profile, parameter) = match mode {
        Mode::ShootImmediate | Mode::ShootDelayed => {
            let delayed = mode == Mode::ShootDelayed;
            let cfg = settings.shooting(m, delayed);
            let sol = if delayed { shoot_delayed(spec, &cfg)? } else { shoot_immediate(spec, &cfg)? };
            (sol.profile, Some(sol.parameter))
        }
        Mode::Minimize => (minimize(spec, &settings.minimize(m), &power_start(m)?)?.profile, None),
        Mode::Cross => unreachable!("cross mode runs both solvers"),
    };
    let report = full_report(spec, &profile, mode.name(), parameter, analysis)?;
    Ok(Solved { profile, report })
}

fn classification_line(report: &SolutionReport) -> String {
    match report.classification {
        Classification::Delayed { delta } => format!("delayed lift-off at delta = {delta}"),
        Classification::Immediate { a, exponent, d_m_estimate } => {
            format!("immediate lift-off, r ~ {a} R^{exponent}, D_M ~ {d_m_estimate}")
        }
    }
}

fn summarize(out: &mut dyn Write, report: &SolutionReport) -> std::io::Result<()> {
    writeln!(out, "{}", classification_line(report))?;
    writeln!(out, "energy {} (dirichlet {}, penalty {})", report.energy.total, report.energy.dirichlet, report.energy.penalty)?;
    writeln!(out, "residual sup {:e}", report.residual_sup)?;
    for (name, v) in &report.checks {
        writeln!(out, "  {name:<20} {:?}", v.status)?;
    }
    Ok(())
}

/// `profile.csv` → `profile-minimize.csv`.
fn sibling(path: &Path, tag: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let name = match path.extension() {
        Some(ext) => format!("{stem}-{tag}.{}", ext.to_string_lossy()),
        None => format!("{stem}-{tag}"),
    };
    path.with_file_name(name)
}

fn stdout_err(e: std::io::Error) -> CliError {
    CliError::Run(Error::Io { path: "<stdout>".into(), source: e })
}

fn run_rho_table(args: &RhoTableArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let spec = resolve_penalty(&args.penalty, file, "rho-table")?;
    let samples = file.pick(args.samples, "samples")?.unwrap_or(200);
    let text = rho_table_csv(&spec, samples)?;
    match file.pick(args.out.clone(), "out")? {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => out.write_all(text.as_bytes()).map_err(stdout_err)?,
    }
    Ok(())
}

fn run_solve(args: &SolveArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let m = required(file.pick(args.m, "m")?, "--M", "solve")?;
    let spec = resolve_penalty(&args.penalty, file, "solve")?;
    let mode = file.pick(args.mode, "mode")?.unwrap_or(Mode::ShootImmediate);
    let settings = resolve_solver(&args.solver, file)?;
    let analysis = resolve_analysis(args.alpha, file)?;
    let diagnostics = file.switch(args.diagnostics, "diagnostics")?;
    let out_path: Option<PathBuf> = file.pick(args.out.clone(), "out")?;
    let report_path: Option<PathBuf> = file.pick(args.report.clone(), "report")?;

    if mode == Mode::Cross {
        let both = cross_validate(&spec, &settings.cross(m, analysis))?;
        let r = &both.report;
        writeln!(out, "shooting a = {}", r.shooting_parameter).map_err(stdout_err)?;
        writeln!(out, "sup discrepancy {:e}, energy gap {:e}", r.sup_discrepancy, r.energy_gap).map_err(stdout_err)?;
        writeln!(out, "residual sup: shooting {:e}, minimizer {:e}", r.shooting_residual, r.minimizer_residual)
            .map_err(stdout_err)?;
        if let Some(path) = &out_path {
            write_profile(path, &spec, &both.shooting, diagnostics)?;
            write_profile(&sibling(path, "minimize"), &spec, &both.minimizer, diagnostics)?;
        }
        if let Some(path) = &report_path {
            write_json(path, r)?;
        }
        return Ok(());
    }

    let solved = solve_one(&spec, m, mode, &settings, &analysis)?;
    summarize(out, &solved.report).map_err(stdout_err)?;
    if let Some(path) = &out_path {
        write_profile(path, &spec, &solved.profile, diagnostics)?;
    }
    if let Some(path) = &report_path {
        write_json(path, &solved.report)?;
    }
    Ok(())
}

fn run_verify(args: &VerifyArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let input: PathBuf = required(file.pick(args.input.clone(), "in")?, "--in", "verify")?;
    let m = required(file.pick(args.m, "m")?, "--M", "verify")?;
    let spec = resolve_penalty(&args.penalty, file, "verify")?;
    let analysis = resolve_analysis(args.alpha, file)?;
    let column_tol = file.pick(args.column_tol, "column_tol")?.unwrap_or(1e-9);
    let table = read_profile(&input, m)?;
    let mut report = full_report(&spec, &table.profile, "verify", None, &analysis)?;
    report.checks.insert("consistency".into(), check_columns(&spec, &table, column_tol)?);
    summarize(out, &report).map_err(stdout_err)?;
    if let Some(path) = file.pick(args.report.clone(), "report")? {
        write_json(&path, &report)?;
    }
    let hard = report.hard_failures();
    if hard.is_empty() {
        Ok(())
    } else {
        Err(CliError::HardCheck(hard.join(", ")))
    }
}

/// One line of the sweep summary.
#[derive(Clone, Debug, Serialize)]
pub struct SweepRow {
    #[serde(rename = "M")]
    pub m: u32,
    pub gamma: f64,
    pub s0: f64,
    pub status: String,
    pub classification: String,
    /// `δ` for delayed, `a` for immediate lift-off.
    pub parameter: Option<f64>,
    pub d_m: Option<f64>,
    pub energy: Option<f64>,
    pub residual_sup: Option<f64>,
    pub failed_checks: String,
    pub message: String,
}

fn sweep_row(m: u32, gamma: f64, s0: f64, delay: Option<f64>, mode: Mode, settings: &SolverSettings) -> SweepRow {
    let mut row = SweepRow {
        m,
        gamma,
        s0,
        status: "error".into(),
        classification: String::new(),
        parameter: None,
        d_m: None,
        energy: None,
        residual_sup: None,
        failed_checks: String::new(),
        message: String::new(),
    };
    let spec = match delay {
        Some(t) => PenaltySpec::delayed(gamma, s0, t),
        None => PenaltySpec::smooth_step(gamma, s0),
    };
    let result = spec.and_then(|spec| solve_one(&spec, m, mode, settings, &AnalysisConfig::default()));
    match result {
        Ok(s) => {
            let r = &s.report;
            row.status = "ok".into();
            let (kind, value) = match r.classification {
                Classification::Delayed { delta } => ("delayed", delta),
                Classification::Immediate { a, .. } => ("immediate", a),
            };
            row.classification = kind.into();
            row.parameter = Some(value);
            row.d_m = r.d_m_estimate();
            row.energy = Some(r.energy.total);
            row.residual_sup = Some(r.residual_sup);
            row.failed_checks = r.failures().join(" ");
        }
        Err(e) => {
            if matches!(&e, Error::Solve(se) if se.is_not_found()) {
                row.status = "not_found".into();
            }
            row.message = e.to_string();
        }
    }
    row
}

pub fn sweep_csv(rows: &[SweepRow]) -> crate::error::Result<String> {
    let header = [
        "M", "gamma", "s0", "status", "classification", "parameter", "d_m", "energy", "residual_sup",
        "failed_checks", "message",
    ];
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    let mut w = csv::Writer::from_writer(Vec::new());
    let wrap = |e: csv::Error| Error::InvalidArgument(format!("csv encoding: {e}"));
    w.write_record(header).map_err(wrap)?;
    for r in rows {
        w.write_record([
            r.m.to_string(),
            fmt_f64(r.gamma),
            fmt_f64(r.s0),
            r.status.clone(),
            r.classification.clone(),
            opt(r.parameter),
            opt(r.d_m),
            opt(r.energy),
            opt(r.residual_sup),
            r.failed_checks.clone(),
            r.message.clone(),
        ])
        .map_err(wrap)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::InvalidArgument(format!("csv encoding: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn run_sweep(args: &SweepArgs, file: &FileConfig, out: &mut dyn Write) -> CliResult<()> {
    let or_file = |v: &Vec<f64>, key: &str| -> CliResult<Vec<f64>> {
        if v.is_empty() {
            file.list(key)
        } else {
            Ok(v.clone())
        }
    };
    let ms = if args.m.is_empty() { file.list("m")? } else { args.m.clone() };
    let gammas = or_file(&args.gamma, "gamma")?;
    let s0s = or_file(&args.s0, "s0")?;
    for (list, flag) in [(ms.is_empty(), "--M"), (gammas.is_empty(), "--gamma"), (s0s.is_empty(), "--s0")] {
        if list {
            return Err(CliError::Usage(format!("sweep range {flag} is empty\n\n{}", usage_of("sweep"))));
        }
    }
    let delay = file.pick(args.delay, "delay")?;
    let mode = file.pick(args.mode, "mode")?.unwrap_or(Mode::ShootImmediate);
    if mode == Mode::Cross {
        return Err(CliError::Usage("sweep runs a single solver; cross mode is not available".into()));
    }
    let settings = resolve_solver(&args.solver, file)?;
    let mut points = Vec::new();
    for &m in &ms {
        for &g in &gammas {
            for &s in &s0s {
                points.push((m, g, s));
            }
        }
    }
    let rows: Vec<SweepRow> =
        points.par_iter().map(|&(m, g, s)| sweep_row(m, g, s, delay, mode, &settings)).collect();
    let text = sweep_csv(&rows)?;
    match file.pick(args.out.clone(), "out")? {
        Some(path) => write_atomic(&path, text.as_bytes())?,
        None => out.write_all(text.as_bytes()).map_err(stdout_err)?,
    }
    let failed = rows.iter().filter(|r| r.status != "ok").count();
    if failed > 0 {
        eprintln!("{failed} of {} runs did not produce a solution", rows.len());
    }
    Ok(())
}

/// Parse `args` (including the program name), run, and return the exit code.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = if code == 0 {
                write!(out, "{}", e.render())
            } else {
                write!(err, "{}", e.render())
            };
            return code;
        }
    };
    let result = FileConfig::load(cli.config.as_deref()).and_then(|file| match &cli.command {
        Command::RhoTable(a) => run_rho_table(a, &file, out),
        Command::Solve(a) => run_solve(a, &file, out),
        Command::Verify(a) => run_verify(a, &file, out),
        Command::Sweep(a) => run_sweep(a, &file, out),
    });
    match result {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn call(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("polyrad").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn config_file_parsing() {
        let f = FileConfig::parse("# c\ngamma = 2.5\nM=3 # trailing\n\nrho-zero = true\n", "cfg").unwrap();
        assert_eq!(f.get::<f64>("gamma").unwrap(), Some(2.5));
        assert_eq!(f.get::<u32>("m").unwrap(), Some(3));
        assert!(f.switch(false, "rho_zero").unwrap());
        assert_eq!(f.pick(Some(1.0), "gamma").unwrap(), Some(1.0));
        assert!(FileConfig::parse("bogus = 1\n", "cfg").is_err());
        assert!(FileConfig::parse("gamma 1\n", "cfg").is_err());
        assert!(f.get::<u32>("gamma").is_err());
    }

    #[test]
    fn missing_m_is_usage_error() {
        let (code, _, err) = call(&["solve", "--gamma", "1", "--s0", "1"]);
        assert_eq!(code, 1);
        assert!(err.contains("missing --M") && err.contains("Usage"), "{err}");
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(call(&["solve", "--bogus"]).0, 1);
        assert_eq!(call(&[]).0, 1);
        assert_eq!(call(&["--help"]).0, 0);
    }

    #[test]
    fn delayed_kernel_is_not_found() {
        let (code, _, err) = call(&["solve", "--mode", "shoot-delayed", "--M", "2", "--rho-zero", "--n", "200"]);
        assert_eq!(code, 2, "{err}");
        assert!(err.contains("no delayed solution in bracket"), "{err}");
    }

    #[test]
    fn sibling_names() {
        assert_eq!(sibling(Path::new("/a/p.csv"), "minimize"), PathBuf::from("/a/p-minimize.csv"));
        assert_eq!(sibling(Path::new("p"), "minimize"), PathBuf::from("p-minimize"));
    }
}
