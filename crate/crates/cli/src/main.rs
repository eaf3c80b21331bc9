//! `twedge`: centering, scaling and Tracy–Widom tools for the largest
//! eigenvalue of complex sample covariance matrices.

// `!(x >= y)` guards are used on purpose to reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod model_args;
mod output;

use std::fmt::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;
use tw_edge::edge::{classify_spikes, diagnose_class_g};
use tw_edge::montecarlo::{run_edge_monte_carlo, GridPoint, SimConfig, TW_TABLE_GRID};
use tw_edge::{EdgeParams, EntryLaw, SolverConfig, TwDistribution};

use model_args::ModelArgs;
use output::{json, sig, RunManifest, Sink};

#[derive(Debug)]
pub enum CliError {
    /// Bad flags or input files (exit 2).
    Usage(String),
    /// Numerical or I/O failure (exit 1).
    Failure(String),
}

impl From<tw_edge::Error> for CliError {
    fn from(e: tw_edge::Error) -> Self {
        CliError::Failure(e.to_string())
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "twedge",
    version,
    about = "Tracy–Widom edge approximation for sample covariance matrices"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug, Serialize)]
enum Command {
    /// Solve for the critical point c and the centering/scaling (mu, sigma)
    Solve(SolveArgs),
    /// Check the finite-sample assumptions behind the approximation
    Diagnose(DiagnoseArgs),
    /// Classify added eigenvalues against the threshold 1/c
    Spike(SpikeArgs),
    /// Evaluate the Tracy–Widom (beta = 2) distribution
    Tw(TwArgs),
    /// Monte Carlo check of the approximation on simulated data
    Simulate(SimulateArgs),
}

#[derive(Args, Debug, Serialize)]
struct Common {
    /// Write outputs and manifest.json into this directory instead of stdout
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args, Debug, Serialize)]
struct SolveArgs {
    #[command(flatten)]
    model: ModelArgs,
    /// Sample size n
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct DiagnoseArgs {
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Smallest acceptable 1 - lambda_1 c
    #[arg(long, default_value_t = SolverConfig::default().margin_min)]
    margin_min: f64,
    /// Largest acceptable lambda_1
    #[arg(long)]
    lambda1_max: Option<f64>,
    /// lambda_p must exceed this
    #[arg(long)]
    lambdap_min: Option<f64>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
struct SpikeArgs {
    /// Base model the spikes are added to
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: u64,
    /// Added eigenvalues
    #[arg(long, value_delimiter = ',', required = true)]
    spikes: Vec<f64>,
    /// Relative half-width of the critical band around 1/c
    #[arg(long, default_value_t = 1e-5)]
    chi_tol: f64,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Serialize)]
#[group(required = true, multiple = false, id = "query")]
struct TwQuery {
    /// F(s)
    #[arg(long, allow_negative_numbers = true, value_name = "S")]
    cdf: Option<f64>,
    /// Inverse CDF at probability P
    #[arg(long, value_name = "P")]
    quantile: Option<f64>,
    /// F at the nine reference quantiles, as CSV (s,target,F0)
    #[arg(long)]
    table: bool,
    /// Solution grid, as CSV (x,q,F0)
    #[arg(long)]
    grid: bool,
}

#[derive(Args, Debug, Serialize)]
struct TwArgs {
    #[command(flatten)]
    query: TwQuery,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    #[command(flatten)]
    common: Common,
}

#[derive(Clone, Copy, Debug, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum SimFormat {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Copy, Debug, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
enum Law {
    ComplexGaussian,
    RealGaussian,
    ScaledRademacher,
    RealRademacher,
}

impl From<Law> for EntryLaw {
    fn from(l: Law) -> Self {
        match l {
            Law::ComplexGaussian => EntryLaw::ComplexGaussian,
            Law::RealGaussian => EntryLaw::RealGaussian,
            Law::ScaledRademacher => EntryLaw::ScaledRademacher,
            Law::RealRademacher => EntryLaw::RealRademacher,
        }
    }
}

#[derive(Args, Debug, Serialize)]
struct SimulateArgs {
    /// JSON simulation config; other flags override its fields
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    n: Option<u64>,
    /// Number of replications [default: 10000]
    #[arg(long)]
    reps: Option<usize>,
    /// Master seed [default: 1]
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    law: Option<Law>,
    /// Number of top eigenvalues retained per replication
    #[arg(long)]
    top_k: Option<usize>,
    /// Worker threads (results do not depend on this)
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long, value_enum, default_value_t)]
    format: SimFormat,
    #[command(flatten)]
    common: Common,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let config = serde_json::to_value(&cli.command).expect("arguments serialize");
    let result = match &cli.command {
        Command::Solve(a) => solve(a, config),
        Command::Diagnose(a) => diagnose(a, config),
        Command::Spike(a) => spike(a, config),
        Command::Tw(a) => tw(a, config),
        Command::Simulate(a) => simulate(a, config),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Failure(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}

fn dims(p: usize, n: u64) -> Result<(usize, usize), CliError> {
    let n = usize::try_from(n).map_err(|_| CliError::Usage(format!("n = {n} is too large")))?;
    Ok((n, p))
}

fn solve(a: &SolveArgs, config: serde_json::Value) -> Result<(), CliError> {
    let start = Instant::now();
    let (spec, h) = a.model.resolve()?;
    let (n, p) = dims(spec.p(), a.n)?;
    let edge = EdgeParams::solve(&h, n, p)?;
    let mut sink = Sink::new(a.common.out.as_deref())?;
    match a.format {
        Format::Text => {
            let mut s = String::new();
            for (name, v) in [
                ("c", edge.c),
                ("mu", edge.mu),
                ("sigma", edge.sigma),
                ("alpha1", edge.alpha1),
                ("margin", edge.margin()),
            ] {
                writeln!(s, "{name:<7} {}", sig(v, 6)).unwrap();
            }
            sink.emit("solve.txt", &s)?;
        }
        Format::Json => sink.emit(
            "solve.json",
            &json(&json!({ "model": spec, "edge": edge, "margin": edge.margin() })),
        )?,
    }
    let mut manifest = RunManifest::new("solve", json!({ "args": config, "model": spec }));
    manifest.edge = Some(edge);
    sink.finish(manifest, start.elapsed().as_secs_f64())
}

fn diagnose(a: &DiagnoseArgs, config: serde_json::Value) -> Result<(), CliError> {
    let start = Instant::now();
    let (spec, h) = a.model.resolve()?;
    let (n, p) = dims(spec.p(), a.n)?;
    let mut cfg = SolverConfig {
        margin_min: a.margin_min,
        ..SolverConfig::default()
    };
    if let Some(v) = a.lambda1_max {
        cfg.lambda1_max = v;
    }
    if let Some(v) = a.lambdap_min {
        cfg.lambdap_min = v;
    }
    let report = diagnose_class_g(&h, n, p, &cfg)?;
    let mut sink = Sink::new(a.common.out.as_deref())?;
    match a.format {
        Format::Text => {
            let mut s = String::new();
            writeln!(s, "n/p          {}", sig(report.n_over_p, 6)).unwrap();
            writeln!(s, "lambda_1     {}", sig(report.lambda1, 6)).unwrap();
            writeln!(s, "lambda_p     {}", sig(report.lambdap, 6)).unwrap();
            writeln!(s, "top mass     {}", sig(report.top_mass, 6)).unwrap();
            writeln!(s, "atom bound   {}", sig(report.atom_bound, 6)).unwrap();
            match report.alpha1_margin {
                Some(m) => writeln!(s, "margin       {}", sig(m, 6)).unwrap(),
                None => writeln!(s, "margin       unavailable (solve failed)").unwrap(),
            }
            writeln!(s).unwrap();
            writeln!(s, "{:<26} {:>12} {:>12}  result", "check", "value", "threshold").unwrap();
            for c in &report.checks {
                let verdict = if c.pass { "pass" } else { "FAIL" };
                writeln!(
                    s,
                    "{:<26} {:>12} {:>12}  {verdict}",
                    c.name,
                    sig(c.value, 6),
                    sig(c.threshold, 6)
                )
                .unwrap();
            }
            writeln!(s).unwrap();
            let verdict = if report.passed() { "PASS" } else { "FAIL" };
            writeln!(s, "summary: {verdict} (failed = {})", report.failures()).unwrap();
            sink.emit("diagnose.txt", &s)?;
        }
        Format::Json => sink.emit(
            "diagnose.json",
            &json(&json!({ "report": report, "failed": report.failures() })),
        )?,
    }
    sink.finish(
        RunManifest::new("diagnose", json!({ "args": config, "model": spec })),
        start.elapsed().as_secs_f64(),
    )
}

fn spike(a: &SpikeArgs, config: serde_json::Value) -> Result<(), CliError> {
    let start = Instant::now();
    let (spec, h) = a.model.resolve()?;
    let (n, p) = dims(spec.p(), a.n)?;
    if let Some(s) = a.spikes.iter().find(|&&s| !(s >= h.lambda_max())) {
        return Err(CliError::Usage(format!(
            "spike {s} is below lambda_1 = {} of the base model",
            h.lambda_max()
        )));
    }
    if !(a.chi_tol >= 0.0) {
        return Err(CliError::Usage(format!(
            "--chi-tol must be non-negative (got {})",
            a.chi_tol
        )));
    }
    let report = classify_spikes(&h, n, p, &a.spikes, a.chi_tol)?;
    let mut sink = Sink::new(a.common.out.as_deref())?;
    match a.format {
        Format::Text => {
            let mut s = String::new();
            writeln!(
                s,
                "threshold 1/c = {}  (c = {}, chi_tol = {:e})",
                sig(report.threshold, 6),
                sig(report.c, 6),
                report.chi_tol
            )
            .unwrap();
            writeln!(s).unwrap();
            writeln!(s, "{:>12} {:>12}  regime", "spike", "distance").unwrap();
            for c in &report.spikes {
                writeln!(s, "{:>12} {:>12}  {}", sig(c.value, 6), sig(c.distance, 6), c.regime).unwrap();
            }
            writeln!(s).unwrap();
            writeln!(s, "critical spikes: {}", report.k_critical).unwrap();
            match report.c_tilde {
                Some(ct) => writeln!(s, "c_tilde = {}", sig(ct, 6)).unwrap(),
                None => writeln!(s, "c_tilde = n/a").unwrap(),
            }
            for w in &report.warnings {
                writeln!(s, "warning: {w}").unwrap();
            }
            sink.emit("spike.txt", &s)?;
        }
        Format::Json => sink.emit("spike.json", &json(&report))?,
    }
    sink.finish(
        RunManifest::new("spike", json!({ "args": config, "model": spec })),
        start.elapsed().as_secs_f64(),
    )
}

fn tw(a: &TwArgs, config: serde_json::Value) -> Result<(), CliError> {
    let start = Instant::now();
    let dist = TwDistribution::standard();
    let q = &a.query;
    let mut sink = Sink::new(a.common.out.as_deref())?;
    if let Some(s) = q.cdf {
        if s.is_nan() {
            return Err(CliError::Usage("--cdf needs a number".into()));
        }
        let f = dist.cdf(s);
        match a.format {
            Format::Text => sink.emit("tw.txt", &format!("{f:.6}\n"))?,
            Format::Json => sink.emit("tw.json", &json(&json!({ "s": s, "cdf": f })))?,
        }
    } else if let Some(prob) = q.quantile {
        let x = dist.quantile(prob).map_err(|e| CliError::Usage(e.to_string()))?;
        match a.format {
            Format::Text => sink.emit("tw.txt", &format!("{x:.6}\n"))?,
            Format::Json => sink.emit("tw.json", &json(&json!({ "p": prob, "quantile": x })))?,
        }
    } else if q.table {
        let rows: Vec<_> = TW_TABLE_GRID
            .iter()
            .map(|&(s, target)| (s, target, dist.cdf(s)))
            .collect();
        match a.format {
            Format::Text => {
                let mut out = String::from("s,target,F0\n");
                for (s, target, f) in rows {
                    writeln!(out, "{s:.2},{target:.2},{f:.6}").unwrap();
                }
                sink.emit("tw_table.csv", &out)?;
            }
            Format::Json => {
                let rows: Vec<_> = rows
                    .iter()
                    .map(|(s, t, f)| json!({ "s": s, "target": t, "F0": f }))
                    .collect();
                sink.emit("tw_table.json", &json(&rows))?;
            }
        }
    } else {
        let mut buf = Vec::new();
        dist.write_csv(&mut buf).map_err(|e| CliError::Failure(e.to_string()))?;
        sink.emit("tw_grid.csv", &String::from_utf8(buf).expect("CSV is ASCII"))?;
    }
    sink.finish(
        RunManifest::new("tw", json!({ "args": config })),
        start.elapsed().as_secs_f64(),
    )
}

fn simulate(a: &SimulateArgs, config: serde_json::Value) -> Result<(), CliError> {
    let start = Instant::now();
    let mut cfg = match &a.config {
        Some(path) => {
            if a.model.sources() > 0 {
                return Err(CliError::Usage("--config cannot be combined with model flags".into()));
            }
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
            let cfg: SimConfig =
                serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            cfg
        }
        None => {
            let (spec, _) = a.model.resolve()?;
            let n =
                a.n.ok_or_else(|| CliError::Usage("--n is required without --config".into()))?;
            let (n, _) = dims(spec.p(), n)?;
            SimConfig::new(spec, n, 10_000, 1)
        }
    };
    if let Some(n) = a.n {
        cfg.n = dims(cfg.p, n)?.0;
    }
    if let Some(r) = a.reps {
        cfg.replications = r;
    }
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(l) = a.law {
        cfg.entry_law = l.into();
    }
    if let Some(k) = a.top_k {
        cfg.top_k = k;
    }
    if a.threads.is_some() {
        cfg.threads = a.threads;
    }
    if cfg.quantile_grid.is_empty() {
        cfg.quantile_grid = TW_TABLE_GRID
            .iter()
            .map(|&(s, target)| GridPoint { s, target })
            .collect();
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    cfg.model.measure().map_err(|e| CliError::Usage(e.to_string()))?;

    let report = run_edge_monte_carlo(&cfg)?;
    let mut sink = Sink::new(a.common.out.as_deref())?;
    match a.format {
        SimFormat::Csv => sink.emit("simulate.csv", &report.csv())?,
        SimFormat::Json => {
            // Wall time lives in the manifest so the report itself is reproducible.
            let mut value = serde_json::to_value(&report).expect("report serializes");
            value
                .as_object_mut()
                .expect("report is an object")
                .remove("wall_time_secs");
            sink.emit("simulate.json", &json(&value))?;
        }
    }
    let mut manifest = RunManifest::new("simulate", json!({ "args": config, "sim": cfg }));
    manifest.edge = Some(report.edge);
    manifest.master_seed = Some(cfg.master_seed);
    sink.finish(manifest, start.elapsed().as_secs_f64())
}
