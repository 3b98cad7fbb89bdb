//! Command-line front end.
//!
//! Exit codes: 0 success, 1 internal failure, 2 invalid or unreadable model
//! file, 3 infeasible or invalid parameters (including usage errors).

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::error::{Error, Result};
use crate::frontier::{re_frontier, rd_frontier, FrontierPoint, SolverConfig};
use crate::model::{validate_model, ProblemInstance};
use crate::sensing::per_input_cost;
use crate::simulator::{run_ht_experiment, run_rd_experiment, CodebookMode, HtParams, RdParams, SimulationMode, DEFAULT_BIN_WIDTH};
use crate::typeclasses::{typical_set_probability, typicality_lower_bound};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_INVALID_MODEL: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "isac", version, about = "Capacity-distortion and rate-exponent tools for state-dependent channels")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file and print "valid" or the violations.
    Validate { model: PathBuf },
    /// Print the per-symbol Bayes estimator and per-input sensing cost.
    Estimator {
        model: PathBuf,
        #[command(flatten)]
        output: OutputArgs,
    },
    #[command(subcommand)]
    Frontier(FrontierCommand),
    #[command(subcommand)]
    Simulate(SimulateCommand),
    #[command(subcommand)]
    Typicality(TypicalityCommand),
}

#[derive(Debug, Subcommand)]
enum FrontierCommand {
    /// Capacity-distortion frontier C(D).
    Rd(FrontierArgs),
    /// Rate-exponent frontier.
    Re(FrontierArgs),
}

#[derive(Debug, Subcommand)]
enum SimulateCommand {
    /// Random coding with ML decoding and per-symbol state estimation.
    Rd(SimRdArgs),
    /// Neyman-Pearson detection of the state distribution.
    Ht(SimHtArgs),
}

#[derive(Debug, Subcommand)]
enum TypicalityCommand {
    /// Chebyshev lower bound on the strongly typical set probability.
    Bound(BoundArgs),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Mode {
    #[value(name = "mc")]
    MonteCarlo,
    #[value(name = "exact_dp")]
    ExactDp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum CodebookArg {
    PerTrial,
    Shared,
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct FrontierArgs {
    model: PathBuf,
    #[arg(long, default_value_t = 21)]
    points: usize,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Write an SVG polyline of the frontier.
    #[arg(long)]
    plot: Option<PathBuf>,
    #[arg(long, default_value_t = SolverConfig::default().max_iterations)]
    max_iterations: usize,
    #[arg(long, default_value_t = SolverConfig::default().convergence_tol)]
    tol: f64,
}

#[derive(Debug, Args)]
struct SimRdArgs {
    model: PathBuf,
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    distortion: f64,
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    #[arg(long)]
    seed: u64,
    /// Codebook input pmf, comma separated; defaults to the C(D) achiever.
    #[arg(long, value_delimiter = ',')]
    px: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = CodebookArg::PerTrial)]
    codebook: CodebookArg,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimHtArgs {
    model: PathBuf,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    alpha: f64,
    #[arg(long, value_enum, default_value_t = Mode::ExactDp)]
    mode: Mode,
    #[arg(long, default_value_t = 1000)]
    trials: usize,
    /// Required in `mc` mode.
    #[arg(long)]
    seed: Option<u64>,
    /// Input pmf, comma separated; defaults to uniform.
    #[arg(long, value_delimiter = ',')]
    px: Option<Vec<f64>>,
    #[arg(long, default_value_t = DEFAULT_BIN_WIDTH)]
    bin_width: f64,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct BoundArgs {
    #[arg(long)]
    mu: f64,
    #[arg(long)]
    n: usize,
    /// Number of cells of the (product) alphabet; defaults to the length of
    /// `--pmf`.
    #[arg(long)]
    cells: Option<usize>,
    /// Also compute the exact typical-set probability under this pmf.
    #[arg(long, value_delimiter = ',')]
    pmf: Option<Vec<f64>>,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InvalidModel(_) | Error::Parse(_) | Error::Read { .. } => EXIT_INVALID_MODEL,
        e if e.is_infeasible() => EXIT_INFEASIBLE,
        Error::Dimension(_) => EXIT_INFEASIBLE,
        _ => EXIT_INTERNAL,
    }
}

/// Parses `argv` (program name first) and runs the command, writing results
/// to standard output and diagnostics to standard error.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    run_with_output(argv, &mut stdout.lock(), &mut stderr.lock())
}

/// [`run_command`] with explicit output streams.
pub fn run_with_output<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INFEASIBLE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() { write!(err, "{rendered}") } else { write!(out, "{rendered}") };
            return code;
        }
    };
    match dispatch(cli.command, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Validate { model } => validate(&model, out),
        Command::Estimator { model, output } => estimator(&model, &output, out, err),
        Command::Frontier(FrontierCommand::Rd(args)) => frontier(&args, true, out, err),
        Command::Frontier(FrontierCommand::Re(args)) => frontier(&args, false, out, err),
        Command::Simulate(SimulateCommand::Rd(args)) => simulate_rd(&args, out, err),
        Command::Simulate(SimulateCommand::Ht(args)) => simulate_ht(&args, out, err),
        Command::Typicality(TypicalityCommand::Bound(args)) => bound(&args, out, err),
    }
}

fn validate(model: &Path, out: &mut dyn Write) -> Result<i32> {
    match ProblemInstance::load(model) {
        Ok(instance) => {
            // load already rejects invalid models; this is a cheap re-check
            let report = validate_model(&instance);
            writeln!(out, "{report}")?;
            Ok(if report.is_valid() { EXIT_OK } else { EXIT_INVALID_MODEL })
        }
        Err(Error::InvalidModel(report)) => {
            writeln!(out, "{report}")?;
            Ok(EXIT_INVALID_MODEL)
        }
        Err(e) => Err(e),
    }
}

/// Writes `content` to `path` atomically, or to `out`.
fn emit(path: Option<&Path>, content: &str, out: &mut dyn Write) -> Result<()> {
    match path {
        None => out.write_all(content.as_bytes())?,
        Some(path) => {
            let dir = match path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p,
                _ => Path::new("."),
            };
            let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
            tmp.write_all(content.as_bytes())?;
            tmp.as_file().sync_all()?;
            tmp.persist(path).map_err(|e| Error::Io(e.error))?;
        }
    }
    Ok(())
}

fn echo_config(err: &mut dyn Write, config: &serde_json::Value) -> Result<()> {
    writeln!(err, "config: {config}")?;
    Ok(())
}

fn estimator(model: &Path, output: &OutputArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let instance = ProblemInstance::load(model)?;
    let distortion = instance.distortion()?;
    let cost = per_input_cost(&instance.channel, &instance.p_s, distortion);
    let ch = &instance.channel;
    let (nx, _, _, nz) = ch.dims();
    let config = json!({ "command": "estimator", "model": model, "format": output.format });
    echo_config(err, &config)?;
    let content = match output.format {
        Format::Csv => {
            let mut s = String::from("x,z,s_hat,cost_x\n");
            for x in 0..nx {
                for z in 0..nz {
                    let r = cost.estimator.get(x, z);
                    s += &format!("{},{},{},{}\n", ch.x.label(x), ch.z.label(z), distortion.s_hat.label(r), cost.cost[x]);
                }
            }
            s
        }
        Format::Json => {
            let table: Vec<Vec<&str>> = (0..nx)
                .map(|x| (0..nz).map(|z| distortion.s_hat.label(cost.estimator.get(x, z))).collect())
                .collect();
            let value = json!({
                "config": config,
                "estimator": table,
                "cost": cost.cost,
                "min_cost": cost.min_cost(),
            });
            serde_json::to_string_pretty(&value)? + "\n"
        }
    };
    emit(output.out.as_deref(), &content, out)?;
    Ok(EXIT_OK)
}

fn frontier(args: &FrontierArgs, rd: bool, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cfg = SolverConfig {
        max_iterations: args.max_iterations,
        convergence_tol: args.tol,
        ..SolverConfig::default()
    };
    cfg.validate()?;
    let instance = ProblemInstance::load(&args.model)?;
    let points = if rd {
        rd_frontier(&instance, args.points, &cfg)?
    } else {
        re_frontier(&instance, args.points, &cfg)?
    };
    let axis = if rd { "D" } else { "E" };
    let config = json!({
        "command": if rd { "frontier rd" } else { "frontier re" },
        "model": args.model,
        "points": args.points,
        "format": args.format,
        "solver": cfg,
    });
    echo_config(err, &config)?;
    let content = match args.format {
        Format::Csv => frontier_csv(axis, instance.channel.x.len(), &points),
        Format::Json => serde_json::to_string_pretty(&json!({ "config": config, "points": points }))? + "\n",
    };
    emit(args.out.as_deref(), &content, out)?;
    if let Some(plot) = &args.plot {
        let svg = frontier_svg(axis, &points);
        emit(Some(plot), &svg, out)?;
    }
    Ok(EXIT_OK)
}

/// `axis,R,px_0..px_{|X|-1},converged`, one row per point.
pub fn frontier_csv(axis: &str, nx: usize, points: &[FrontierPoint]) -> String {
    let mut s = format!("{axis},R");
    for x in 0..nx {
        s += &format!(",px_{x}");
    }
    s += ",converged\n";
    for p in points {
        s += &format!("{},{}", p.target, p.rate);
        for v in &p.p_x {
            s += &format!(",{v}");
        }
        s += &format!(",{}\n", p.converged);
    }
    s
}

/// Single-polyline SVG of rate against the frontier target.
pub fn frontier_svg(axis: &str, points: &[FrontierPoint]) -> String {
    const W: f64 = 480.0;
    const H: f64 = 320.0;
    const M: f64 = 48.0;
    let span = |vals: &mut dyn Iterator<Item = f64>| {
        let (lo, hi) = vals.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(v), b.max(v)));
        if hi > lo { (lo, hi) } else { (lo, lo + 1.0) }
    };
    let (x0, x1) = span(&mut points.iter().map(|p| p.target));
    let (y0, y1) = span(&mut points.iter().map(|p| p.rate).chain([0.0]));
    let coords: Vec<String> = points
        .iter()
        .map(|p| {
            let px = M + (p.target - x0) / (x1 - x0) * (W - 2.0 * M);
            let py = H - M - (p.rate - y0) / (y1 - y0) * (H - 2.0 * M);
            format!("{px:.2},{py:.2}")
        })
        .collect();
    format!(
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{W}" height="{H}" viewBox="0 0 {W} {H}">
<line x1="{M}" y1="{b}" x2="{r}" y2="{b}" stroke="black"/>
<line x1="{M}" y1="{M}" x2="{M}" y2="{b}" stroke="black"/>
<text x="{cx}" y="{lx}" text-anchor="middle">{axis} [{x0:.4}, {x1:.4}]</text>
<text x="12" y="{cy}" text-anchor="middle" transform="rotate(-90 12 {cy})">R (bits) [{y0:.4}, {y1:.4}]</text>
<polyline fill="none" stroke="steelblue" stroke-width="2" points="{pts}"/>
</svg>
"#,
        b = H - M,
        r = W - M,
        cx = W / 2.0,
        lx = H - 12.0,
        cy = H / 2.0,
        pts = coords.join(" "),
    )
}

fn simulate_rd(args: &SimRdArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let instance = ProblemInstance::load(&args.model)?;
    let params = RdParams {
        p_x: args.px.clone(),
        codebook: match args.codebook {
            CodebookArg::PerTrial => CodebookMode::PerTrial,
            CodebookArg::Shared => CodebookMode::Shared,
        },
        workers: args.workers,
        ..RdParams::new(args.rate, args.distortion, args.n, args.trials, args.seed)
    };
    echo_config(err, &json!({ "command": "simulate rd", "model": args.model, "params": params, "workers": args.workers }))?;
    let report = run_rd_experiment(&instance, &params)?;
    emit(args.out.as_deref(), &(report.to_json() + "\n"), out)?;
    Ok(EXIT_OK)
}

fn simulate_ht(args: &SimHtArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let mode = match args.mode {
        Mode::MonteCarlo => SimulationMode::MonteCarlo,
        Mode::ExactDp => SimulationMode::ExactDp,
    };
    if mode == SimulationMode::MonteCarlo && args.seed.is_none() {
        return Err(Error::InvalidParameter("--seed is required in mc mode".into()));
    }
    let instance = ProblemInstance::load(&args.model)?;
    let nx = instance.channel.x.len();
    let p_x = args.px.clone().unwrap_or_else(|| vec![1.0 / nx as f64; nx]);
    let params = HtParams {
        bin_width: args.bin_width,
        trials: if mode == SimulationMode::MonteCarlo { args.trials } else { 0 },
        workers: args.workers,
        ..HtParams::new(p_x, args.n, args.alpha, mode, args.seed)
    };
    echo_config(err, &json!({ "command": "simulate ht", "model": args.model, "params": params, "workers": args.workers }))?;
    let report = run_ht_experiment(&instance, &params)?;
    emit(args.out.as_deref(), &(report.to_json() + "\n"), out)?;
    Ok(EXIT_OK)
}

fn bound(args: &BoundArgs, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32> {
    let cells = match (args.cells, &args.pmf) {
        (Some(c), _) => c,
        (None, Some(p)) => p.len(),
        (None, None) => return Err(Error::InvalidParameter("--cells or --pmf required".into())),
    };
    let lower = typicality_lower_bound(args.mu, args.n, cells)?;
    let exact = match &args.pmf {
        Some(p) if p.len() != cells => {
            return Err(Error::Dimension(format!("pmf has {} entries, expected {cells}", p.len())));
        }
        Some(p) => {
            crate::model::Pmf::checked(p.clone())?;
            Some(typical_set_probability(p, args.n, args.mu))
        }
        None => None,
    };
    let config = json!({ "command": "typicality bound", "mu": args.mu, "n": args.n, "cells": cells, "pmf": args.pmf });
    echo_config(err, &config)?;
    let value = json!({
        "config": config,
        "lower_bound": lower,
        "vacuous": lower <= 0.0,
        "exact_probability": exact,
    });
    writeln!(out, "{}", serde_json::to_string_pretty(&value)?)?;
    Ok(EXIT_OK)
}
