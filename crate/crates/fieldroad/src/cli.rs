//! Command-line surface tying the modules into reproducible runs.
//!
//! Data outputs are deterministic (no timestamps, 17-significant-digit
//! floats); run metadata with timings goes to separate JSON files. A full
//! run configuration round-trips through JSON via `--config`.

use std::path::PathBuf;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::checks;
use crate::cone::{self, ConeConfig, RoadParams};
use crate::csvio::{self, Field};
use crate::geometry::{self, SweepAxis};
use crate::grid::GridSpec;
use crate::hj;
use crate::kppsim::{self, EpsRunConfig, StripConfig};
use crate::minimize::solve_minimizer;
use crate::params::{Params, SpaceTimePoint};
use crate::paths;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    BadFlag(String),
    #[error("--config conflicts with an explicit subcommand")]
    ConfigConflict,
    #[error("no command given (pass a subcommand or --config)")]
    NoCommand,
    #[error("failed reading config {path}: {detail}")]
    ConfigRead { path: String, detail: String },
    #[error(transparent)]
    Domain(#[from] crate::params::DomainError),
    #[error(transparent)]
    Minimize(#[from] crate::minimize::MinimizeError),
    #[error(transparent)]
    Path(#[from] paths::PathError),
    #[error(transparent)]
    Grid(#[from] crate::grid::GridError),
    #[error(transparent)]
    Geometry(#[from] geometry::GeometryError),
    #[error(transparent)]
    Cone(#[from] cone::ConeError),
    #[error(transparent)]
    Hj(#[from] hj::HjError),
    #[error(transparent)]
    Kpp(#[from] kppsim::KppError),
    #[error(transparent)]
    Csv(#[from] csvio::CsvError),
    #[error("{failed} point(s) failed to evaluate; first: {first}")]
    PartialBatch { failed: usize, first: String },
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::BadFlag(_) => "usage",
            CliError::ConfigConflict | CliError::NoCommand | CliError::ConfigRead { .. } => {
                "config"
            }
            CliError::Domain(_) | CliError::Minimize(_) => "domain",
            CliError::Path(_) => "path",
            CliError::Grid(_) | CliError::Geometry(_) => "geometry",
            CliError::Cone(_) => "cone",
            CliError::Hj(_) => "hj",
            CliError::Kpp(_) => "kpp",
            CliError::Csv(_) => "io",
            CliError::PartialBatch { .. } => "batch",
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "fieldroad",
    version,
    about = "Field-road front propagation: closed-form value, optimal paths, \
             level-set geometry, cone extension, and PDE oracles"
)]
struct Cli {
    /// Load the full run configuration (a serialized subcommand) from JSON.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Cap the worker thread count (env FIELDROAD_THREADS as fallback).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Option<Command>,
}

/// One reproducible run. Serializes losslessly to JSON for `--config`.
#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Command {
    /// Evaluate s*, phi*, J, v and the regime at points.
    Eval(EvalArgs),
    /// Extract level curves of phi*(., ., t) on a window.
    Contour(ContourArgs),
    /// Reproduce the level-set parameter sweeps.
    Sweep(SweepArgs),
    /// Build the optimal control triplet for one point.
    Path(PathArgs),
    /// Audit Freidlin's condition at front points.
    Freidlin(FreidlinArgs),
    /// Two-road cone: branch payoffs, combined value, admissibility.
    Cone(ConeArgs),
    /// Grid-solve the obstacle problem and compare to the closed form.
    Hj(HjArgs),
    /// Scaled phase equation: gap to the closed form across eps values.
    Kpp(KppArgs),
    /// Thin-strip two-layer system: boundary-relation residual per delta.
    Strip(StripArgs),
    /// Run the seeded property suite; nonzero exit on any failure.
    Check(CheckArgs),
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Road transport capacity (> 0).
    #[arg(long, default_value_t = 2.0)]
    pub a: f64,
    /// Road tangential drift.
    #[arg(long, default_value_t = 2.0)]
    pub b: f64,
    /// Field advection speed.
    #[arg(long, default_value_t = 2.0)]
    pub c: f64,
}

impl ModelArgs {
    fn params(&self) -> Result<Params, CliError> {
        Ok(Params::new(self.a, self.b, self.c)?)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowArgs {
    /// Window as "x_min,x_max,y_min,y_max".
    #[arg(long, default_value = "-5,25,0,12")]
    pub window: String,
    #[arg(long, default_value_t = 800)]
    pub nx: usize,
    #[arg(long, default_value_t = 400)]
    pub ny: usize,
}

impl WindowArgs {
    fn spec(&self) -> Result<GridSpec, CliError> {
        let v = parse_floats(&self.window, 4, "--window")?;
        Ok(GridSpec::new(v[0], v[1], v[2], v[3], self.nx, self.ny)?)
    }
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Point "x,y"; repeatable.
    #[arg(long = "point", required = true)]
    pub points: Vec<String>,
    /// Output CSV path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    #[arg(long, default_value_t = 1.0)]
    pub level: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepArgs {
    /// Fixed coefficients, e.g. "a=2,b=2".
    #[arg(long)]
    pub fixed: String,
    /// Swept coefficient as "name=start:stop:step", endpoints inclusive.
    #[arg(long)]
    pub vary: String,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[arg(long, default_value_t = 1.0)]
    pub level: f64,
    /// Contour CSV output path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Optional per-value metrics CSV (x_max and road extent).
    #[arg(long)]
    pub metrics_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Point "x,y".
    #[arg(long)]
    pub point: String,
    /// JSON report path (stdout if omitted).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreidlinArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Number of front points (ray directions).
    #[arg(long, default_value_t = 100)]
    pub n_points: usize,
    /// Path samples per front point.
    #[arg(long, default_value_t = 128)]
    pub samples: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConeArgs {
    /// Half-geometry parameter alpha in (0, pi/2].
    #[arg(long, default_value_t = std::f64::consts::FRAC_PI_4)]
    pub alpha: f64,
    /// Horizontal road as "capacity,drift".
    #[arg(long, default_value = "2,2")]
    pub road0: String,
    /// Slanted road as "capacity,drift".
    #[arg(long, default_value = "2,2")]
    pub road_alpha: String,
    #[arg(long, default_value_t = 1.0)]
    pub t: f64,
    /// Point "x,y" inside the cone; repeatable.
    #[arg(long = "point", required = true)]
    pub points: Vec<String>,
    /// Radius range for the admissibility check.
    #[arg(long, default_value_t = 20.0)]
    pub r_max: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HjArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 0.45)]
    pub cfl: f64,
    /// Initial cone steepness.
    #[arg(long, default_value_t = 50.0)]
    pub k: f64,
    /// "lax-friedrichs" or "godunov".
    #[arg(long, default_value = "lax-friedrichs")]
    pub scheme: String,
    /// Field dump CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run metadata JSON path.
    #[arg(long)]
    pub metadata_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KppArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub grid: WindowArgs,
    /// Scale parameters; repeatable, decreasing recommended.
    #[arg(long = "eps", default_values_t = vec![0.4, 0.2, 0.1])]
    pub eps: Vec<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t_end: f64,
    #[arg(long, default_value_t = 50.0)]
    pub k: f64,
    /// Gap CSV path.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub metadata_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StripArgs {
    /// Strip thicknesses; repeatable, decreasing recommended.
    #[arg(long = "delta", default_values_t = vec![0.2, 0.1, 0.05])]
    pub deltas: Vec<f64>,
    /// Integrated road capacity a = sigma delta.
    #[arg(long, default_value_t = 2.0)]
    pub a_target: f64,
    /// Integrated road drift b = b_tilde delta.
    #[arg(long, default_value_t = 1.0)]
    pub b_target: f64,
    #[command(flatten)]
    pub grid: WindowArgs,
    #[arg(long, default_value_t = 0.25)]
    pub t_end: f64,
    /// Explicit-part time step; 0 picks the stability bound with margin.
    #[arg(long, default_value_t = 0.0)]
    pub dt: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub metadata_out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckArgs {
    /// Seed for the fuzz suites.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn parse_floats(s: &str, want: usize, flag: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != want {
        return Err(CliError::BadFlag(format!(
            "{flag} expects {want} comma-separated numbers, got \"{s}\""
        )));
    }
    parts
        .iter()
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::BadFlag(format!("{flag}: cannot parse \"{p}\" as a number")))
        })
        .collect()
}

fn parse_point(s: &str) -> Result<(f64, f64), CliError> {
    let v = parse_floats(s, 2, "--point")?;
    Ok((v[0], v[1]))
}

fn parse_road(s: &str, flag: &str) -> Result<RoadParams, CliError> {
    let v = parse_floats(s, 2, flag)?;
    Ok(RoadParams { capacity: v[0], drift: v[1] })
}

/// "a=2,b=2" into named coefficient assignments.
fn parse_fixed(s: &str) -> Result<Vec<(String, f64)>, CliError> {
    s.split(',')
        .map(|kv| {
            let (name, value) = kv
                .split_once('=')
                .ok_or_else(|| CliError::BadFlag(format!("--fixed entry \"{kv}\" is not name=value")))?;
            let value: f64 = value.trim().parse().map_err(|_| {
                CliError::BadFlag(format!("--fixed: cannot parse \"{value}\" as a number"))
            })?;
            Ok((name.trim().to_string(), value))
        })
        .collect()
}

/// "name=start:stop:step" into the swept axis and its inclusive values.
fn parse_vary(s: &str) -> Result<(SweepAxis, Vec<f64>), CliError> {
    let (name, range) = s
        .split_once('=')
        .ok_or_else(|| CliError::BadFlag(format!("--vary \"{s}\" is not name=start:stop:step")))?;
    let axis = match name.trim() {
        "b" => SweepAxis::B,
        "c" => SweepAxis::C,
        other => {
            return Err(CliError::BadFlag(format!(
                "--vary supports b or c, got \"{other}\""
            )))
        }
    };
    let parts: Vec<&str> = range.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::BadFlag(format!("--vary range \"{range}\" is not start:stop:step")));
    }
    let nums: Result<Vec<f64>, _> = parts.iter().map(|p| p.trim().parse::<f64>()).collect();
    let nums =
        nums.map_err(|_| CliError::BadFlag(format!("--vary: cannot parse \"{range}\"")))?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if step <= 0.0 || stop < start {
        return Err(CliError::BadFlag(format!("--vary range \"{range}\" must ascend")));
    }
    let mut values = Vec::new();
    let n = ((stop - start) / step).round() as usize;
    for k in 0..=n {
        let v = start + k as f64 * step;
        if v <= stop + 1e-12 * step {
            values.push(v);
        }
    }
    Ok((axis, values))
}

fn write_or_print(path: &Option<PathBuf>, body: &str) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, body).map_err(|source| {
            CliError::Csv(csvio::CsvError::Io { path: p.display().to_string(), source })
        }),
        None => {
            print!("{body}");
            Ok(())
        }
    }
}

/// Parses argv and runs the selected command.
///
/// Exit codes: 0 success, 1 validation or runtime error (machine-readable
/// single-line JSON on stderr), 2 property-audit failure from `check`.
pub fn parse_and_dispatch<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    print!("{e}");
                    0
                }
                _ => {
                    emit_error("usage", &e.render().to_string().replace('\n', " "));
                    1
                }
            };
        }
    };
    if let Some(n) = cli
        .threads
        .or_else(|| std::env::var("FIELDROAD_THREADS").ok().and_then(|v| v.parse().ok()))
    {
        // Ignore failure: the global pool can only be set once per process.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let command = match (cli.command, cli.config) {
        (Some(_), Some(_)) => {
            emit_error("config", &CliError::ConfigConflict.to_string());
            return 1;
        }
        (Some(cmd), None) => cmd,
        (None, Some(path)) => match load_config(&path) {
            Ok(cmd) => cmd,
            Err(e) => {
                emit_error(e.kind(), &e.to_string());
                return 1;
            }
        },
        (None, None) => {
            emit_error("usage", &CliError::NoCommand.to_string());
            return 1;
        }
    };
    match dispatch(command) {
        Ok(code) => code,
        Err(e) => {
            emit_error(e.kind(), &e.to_string());
            1
        }
    }
}

fn emit_error(kind: &str, message: &str) {
    let body = serde_json::json!({ "error": message, "kind": kind });
    eprintln!("{body}");
}

/// Loads a serialized command from JSON.
pub fn load_config(path: &std::path::Path) -> Result<Command, CliError> {
    let body = std::fs::read_to_string(path).map_err(|e| CliError::ConfigRead {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    serde_json::from_str(&body).map_err(|e| CliError::ConfigRead {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Saves a command as JSON (the `--config` format).
pub fn save_config(path: &std::path::Path, command: &Command) -> Result<(), CliError> {
    let body = serde_json::to_string_pretty(command).expect("commands serialize");
    std::fs::write(path, body).map_err(|e| CliError::ConfigRead {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    match command {
        Command::Eval(args) => run_eval(args),
        Command::Contour(args) => run_contour(args),
        Command::Sweep(args) => run_sweep(args),
        Command::Path(args) => run_path(args),
        Command::Freidlin(args) => run_freidlin(args),
        Command::Cone(args) => run_cone(args),
        Command::Hj(args) => run_hj(args),
        Command::Kpp(args) => run_kpp(args),
        Command::Strip(args) => run_strip(args),
        Command::Check(args) => run_check(args),
    }
}

fn run_eval(args: EvalArgs) -> Result<i32, CliError> {
    let params = args.model.params()?;
    let mut rows = Vec::new();
    let mut failed = 0usize;
    let mut first_err = String::new();
    for raw in &args.points {
        let (x, y) = parse_point(raw)?;
        let p = SpaceTimePoint { x, y, t: args.t };
        match solve_minimizer(&params, p) {
            Ok(ev) => rows.push((p, ev)),
            Err(e) => {
                if failed == 0 {
                    first_err = e.to_string();
                }
                failed += 1;
            }
        }
    }
    let body = csvio::render_csv(
        csvio::EVAL_HEADER,
        rows.iter().map(|(p, ev)| {
            vec![
                Field::Float(p.x),
                Field::Float(p.y),
                Field::Float(p.t),
                Field::Float(ev.s_star),
                Field::Float(ev.phi_star),
                Field::Float(ev.payoff),
                Field::Float(ev.value),
                Field::Str(ev.regime.to_string()),
            ]
        }),
    )?;
    write_or_print(&args.out, &body)?;
    if failed > 0 {
        return Err(CliError::PartialBatch { failed, first: first_err });
    }
    Ok(0)
}

fn run_contour(args: ContourArgs) -> Result<i32, CliError> {
    let params = args.model.params()?;
    let spec = args.grid.spec()?;
    let polylines = geometry::phi_contours(&params, spec, args.t, args.level)?;
    let rows = polylines.iter().enumerate().flat_map(|(pid, poly)| {
        poly.vertices.iter().enumerate().map(move |(vid, v)| {
            vec![
                Field::Str("level".into()),
                Field::Float(args.level),
                Field::Int(pid),
                Field::Int(vid),
                Field::Float(v[0]),
                Field::Float(v[1]),
            ]
        })
    });
    let body = csvio::render_csv(csvio::CONTOUR_HEADER, rows)?;
    write_or_print(&args.out, &body)?;
    Ok(0)
}

fn run_sweep(args: SweepArgs) -> Result<i32, CliError> {
    let fixed = parse_fixed(&args.fixed)?;
    let (axis, values) = parse_vary(&args.vary)?;
    let mut base = Params::new(2.0, 2.0, 2.0)?;
    for (name, value) in &fixed {
        match name.as_str() {
            "a" => base.a = *value,
            "b" => base.b = *value,
            "c" => base.c = *value,
            other => {
                return Err(CliError::BadFlag(format!("--fixed: unknown coefficient \"{other}\"")))
            }
        }
    }
    let spec = args.grid.spec()?;
    let entries = geometry::sweep_figure(base, axis, &values, spec, args.level)?;
    if let Some(out) = &args.out {
        csvio::write_sweep_csv(out, &entries)?;
    }
    if let Some(path) = &args.metrics_out {
        let rows = entries.iter().map(|e| {
            vec![
                Field::Str(e.param_name.to_string()),
                Field::Float(e.param_value),
                Field::Float(e.x_max_omega),
                Field::Float(e.road_extent),
            ]
        });
        let body = csvio::render_csv("param_name,param_value,x_max_omega,road_extent", rows)?;
        write_or_print(&Some(path.clone()), &body)?;
    }
    if args.out.is_none() && args.metrics_out.is_none() {
        for e in &entries {
            println!(
                "{} = {:>6}: x_max(Omega) = {:.6}, road extent = {:.6}",
                e.param_name, e.param_value, e.x_max_omega, e.road_extent
            );
        }
    }
    Ok(0)
}

fn run_path(args: PathArgs) -> Result<i32, CliError> {
    let params = args.model.params()?;
    let (x, y) = parse_point(&args.point)?;
    let p = SpaceTimePoint::new(x, y, args.t)?;
    let plan = paths::build_optimal_plan(&params, p)?;
    let payoff = paths::path_payoff(&params, &plan, p)?;
    let ev = solve_minimizer(&params, p)?;
    let report = serde_json::json!({
        "plan": plan,
        "payoff": payoff,
        "closed_form_J": ev.payoff,
        "payoff_agreement": (payoff.value - ev.payoff).abs(),
    });
    write_or_print(&args.out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
    Ok(0)
}

fn run_freidlin(args: FreidlinArgs) -> Result<i32, CliError> {
    let params = args.model.params()?;
    let n = args.n_points.max(1);
    let mut min_inequality = f64::INFINITY;
    let mut max_equality_error: f64 = 0.0;
    let mut max_surplus_error: f64 = 0.0;
    let mut per_point = Vec::with_capacity(n);
    for k in 0..n {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        let p = paths::locate_front_point(&params, theta, args.t)?;
        let report = paths::freidlin_check(&params, p, args.samples)?;
        min_inequality = min_inequality.min(report.min_inequality);
        max_equality_error = max_equality_error.max(report.max_equality_error);
        max_surplus_error = max_surplus_error.max(report.max_surplus_error);
        per_point.push(serde_json::json!({
            "theta": theta,
            "x": p.x,
            "y": p.y,
            "regime": format!("{}", report.regime),
            "min_inequality": report.min_inequality,
        }));
    }
    let report = serde_json::json!({
        "n_points": n,
        "min_inequality": min_inequality,
        "max_equality_error": max_equality_error,
        "max_surplus_error": max_surplus_error,
        "points": per_point,
    });
    write_or_print(&args.out, &format!("{}\n", serde_json::to_string_pretty(&report).unwrap()))?;
    Ok(0)
}

fn run_cone(args: ConeArgs) -> Result<i32, CliError> {
    let cfg = ConeConfig::new(
        args.alpha,
        parse_road(&args.road0, "--road0")?,
        parse_road(&args.road_alpha, "--road-alpha")?,
    )?;
    let report = cone::theorem5_condition(&cfg, args.r_max, 256)?;
    let mut rows = Vec::new();
    for raw in &args.points {
        let (x, y) = parse_point(raw)?;
        let p = SpaceTimePoint::new(x, y, args.t)?;
        let branches = cone::payoff_j_alpha(&cfg, p)?;
        let value = if report.pass {
            cone::value_w_alpha(&cfg, p, cone::ConditionEvidence::Verified(&report))?
        } else {
            cone::value_w_alpha(&cfg, p, cone::ConditionEvidence::Unverified)?
        };
        rows.push(vec![
            Field::Float(p.x),
            Field::Float(p.y),
            Field::Float(p.t),
            Field::Float(branches.j_gamma0),
            Field::Float(branches.j_gamma_alpha),
            Field::Float(branches.j_alpha),
            Field::Float(value.w_alpha),
        ]);
    }
    let body = csvio::render_csv(csvio::CONE_HEADER, rows)?;
    write_or_print(&args.out, &body)?;
    if !report.pass {
        emit_error(
            "cone",
            &format!(
                "admissibility condition unverified (max violation {:.3e}); values carry the override flag",
                report.max_violation
            ),
        );
    }
    Ok(0)
}

fn scheme_from_flag(s: &str) -> Result<hj::Scheme, CliError> {
    match s {
        "lax-friedrichs" | "lf" => Ok(hj::Scheme::LaxFriedrichs),
        "godunov" => Ok(hj::Scheme::Godunov),
        other => Err(CliError::BadFlag(format!(
            "--scheme must be lax-friedrichs or godunov, got \"{other}\""
        ))),
    }
}

fn run_hj(args: HjArgs) -> Result<i32, CliError> {
    let params = args.model.params()?;
    let spec = args.grid.spec()?;
    let config = hj::SolverConfig {
        spec,
        cfl: args.cfl,
        t_end: args.t_end,
        k_init: args.k,
        scheme: scheme_from_flag(&args.scheme)?,
    };
    let started = Instant::now();
    let report = hj::solve(&config, &params)?;
    let elapsed = started.elapsed().as_secs_f64();
    let comparison = hj::compare_to_closed_form(&report.field, &params, args.t_end, &spec)?;
    if let Some(out) = &args.out {
        csvio::write_field_csv(out, &report.field)?;
    }
    let metadata = serde_json::json!({
        "grid": spec,
        "cfl": args.cfl,
        "k_init": args.k,
        "scheme": args.scheme,
        "t_end": args.t_end,
        "steps": report.steps,
        "zero_nodes": report.zero_nodes,
        "l_inf": comparison.l_inf,
        "l1": comparison.l1,
        "collar": comparison.collar,
        "seconds": elapsed,
    });
    if let Some(path) = &args.metadata_out {
        csvio::write_metadata_json(path, &metadata)?;
    }
    println!("{}", serde_json::to_string(&metadata).unwrap());
    Ok(0)
}

fn run_kpp(args: KppArgs) -> Result<i32, CliError> {
    let params = args.model.params()?;
    let spec = args.grid.spec()?;
    let mut metric_rows = Vec::new();
    let mut meta = Vec::new();
    for &eps in &args.eps {
        let config = EpsRunConfig::with_auto_dt(eps, spec, args.t_end, args.k, &params)?;
        let started = Instant::now();
        let gap = kppsim::phase_gap(&config, &params)?;
        meta.push(serde_json::json!({
            "eps": eps,
            "dt": config.dt,
            "gap": gap,
            "seconds": started.elapsed().as_secs_f64(),
        }));
        metric_rows.push(("eps", eps, gap));
    }
    let body = csvio::render_csv(
        csvio::METRIC_HEADER,
        metric_rows.iter().map(|(n, v, m)| {
            vec![Field::Str(n.to_string()), Field::Float(*v), Field::Float(*m)]
        }),
    )?;
    write_or_print(&args.out, &body)?;
    if let Some(path) = &args.metadata_out {
        csvio::write_metadata_json(path, &serde_json::json!({ "grid": spec, "runs": meta }))?;
    }
    Ok(0)
}

fn run_strip(args: StripArgs) -> Result<i32, CliError> {
    let spec = args.grid.spec()?;
    let mut metric_rows = Vec::new();
    let mut meta = Vec::new();
    for &delta in &args.deltas {
        let sigma = args.a_target / delta;
        let b_tilde = args.b_target / delta;
        let dx = spec.dx();
        let dt = if args.dt > 0.0 {
            args.dt
        } else {
            0.8 / (2.0 * sigma.max(1.0) / (dx * dx) + b_tilde.abs() / dx + 1.0)
        };
        let config = StripConfig {
            delta,
            a_target: args.a_target,
            b_target: args.b_target,
            spec,
            dt,
            t_end: args.t_end,
        };
        let started = Instant::now();
        let report = kppsim::solve_thin_strip(&config)?;
        meta.push(serde_json::json!({
            "delta": delta,
            "dt": dt,
            "residual": report.residual,
            "flux_mismatch": report.flux_mismatch,
            "seconds": started.elapsed().as_secs_f64(),
        }));
        metric_rows.push(("delta", delta, report.residual));
    }
    let body = csvio::render_csv(
        csvio::METRIC_HEADER,
        metric_rows.iter().map(|(n, v, m)| {
            vec![Field::Str(n.to_string()), Field::Float(*v), Field::Float(*m)]
        }),
    )?;
    write_or_print(&args.out, &body)?;
    if let Some(path) = &args.metadata_out {
        csvio::write_metadata_json(path, &serde_json::json!({ "grid": spec, "runs": meta }))?;
    }
    Ok(0)
}

fn run_check(args: CheckArgs) -> Result<i32, CliError> {
    let outcomes = checks::run_all(args.seed);
    let mut failed = 0usize;
    for outcome in &outcomes {
        let tag = if outcome.pass { "PASS" } else { "FAIL" };
        println!("{tag} {}: {}", outcome.name, outcome.detail);
        if !outcome.pass {
            failed += 1;
        }
    }
    if failed > 0 {
        Ok(2)
    } else {
        Ok(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vary_ranges_are_inclusive() {
        let (axis, values) = parse_vary("c=1:10:1").unwrap();
        assert_eq!(axis, SweepAxis::C);
        assert_eq!(values.len(), 10);
        assert_eq!(values[0], 1.0);
        assert_eq!(values[9], 10.0);
        assert!(parse_vary("a=1:10:1").is_err());
        assert!(parse_vary("c=10:1:1").is_err());
    }

    #[test]
    fn fixed_assignments_parse() {
        let fixed = parse_fixed("a=2,b=2").unwrap();
        assert_eq!(fixed, vec![("a".into(), 2.0), ("b".into(), 2.0)]);
        assert!(parse_fixed("a2").is_err());
    }

    #[test]
    fn command_round_trips_through_json() {
        let cli = Cli::try_parse_from([
            "fieldroad", "eval", "--a", "2", "--b", "2", "--c", "2", "--t", "1", "--point", "4,0",
        ])
        .unwrap();
        let command = cli.command.unwrap();
        let json = serde_json::to_string(&command).unwrap();
        let back: Command = serde_json::from_str(&json).unwrap();
        assert_eq!(command, back);
    }

    #[test]
    fn help_and_usage_exit_codes() {
        assert_eq!(parse_and_dispatch(["fieldroad", "--help"]), 0);
        assert_eq!(parse_and_dispatch(["fieldroad", "no-such-command"]), 1);
        assert_eq!(parse_and_dispatch(["fieldroad"]), 1);
    }
}
