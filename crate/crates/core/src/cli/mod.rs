//! Command-line front end. Every subcommand writes a JSON report (config
//! echo, version, generator, seed, wall time, verdict) and, where it has
//! tabular output, deterministic CSV tables.

mod commands;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::Value;

pub use report::{emit_report, envelope, Table};

use crate::error::Result;

/// Environment variable that fixes the worker thread count.
pub const THREADS_ENV: &str = "MOMENTRAY_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "momentray",
    version,
    about = "Momentum ray transforms of symmetric tensor fields"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Tabulate I^0..I^k of a field on a line grid.
    Transform(TransformArgs),
    /// Split a field into k-solenoidal and k-potential parts on a grid.
    Decompose(DecomposeArgs),
    /// Residuals of a stored decomposition.
    Verify(VerifyArgs),
    /// Quadrature moments against the closed form on random lines.
    OracleDiff(OracleDiffArgs),
    /// Rank of the slice systems at random frequencies.
    RankProbe(RankProbeArgs),
    /// Moments of (k+1)-potential fields.
    CheckKernel(KernelArgs),
    /// Parity, iterated-John and transport conditions on moment data.
    CheckRange(RangeArgs),
    /// chi and Psi identities for a constructed field.
    ChiVerify(ChiArgs),
    /// Fourier-slice identity for I^q.
    SliceCheck(SliceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    GaussLegendre,
    Trapezoid,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum DiffArg {
    Spectral,
    Central,
}

#[derive(Debug, Args, Serialize)]
pub struct TransformArgs {
    /// Field JSON.
    #[arg(long)]
    pub field: PathBuf,
    /// Highest moment order.
    #[arg(long)]
    pub k: usize,
    /// Number of directions (even; closed under reversal).
    #[arg(long, default_value_t = 64)]
    pub directions: usize,
    /// Offsets per frame axis.
    #[arg(long, default_value_t = 33)]
    pub offsets: usize,
    /// Offsets cover [-extent, extent].
    #[arg(long, default_value_t = 4.0)]
    pub extent: f64,
    /// Quadrature nodes per line.
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    #[arg(long, value_enum, default_value_t = SchemeArg::GaussLegendre)]
    pub scheme: SchemeArg,
    /// Use closed-form moments instead of quadrature.
    #[arg(long)]
    pub oracle: bool,
    /// Moment data JSON; the report goes to `<stem>.report.json`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct DecomposeArgs {
    #[arg(long)]
    pub field: PathBuf,
    #[arg(long)]
    pub k: usize,
    /// Nodes per axis.
    #[arg(long, default_value_t = 128)]
    pub grid: usize,
    /// Grid covers [-extent, extent) per axis.
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
    /// Writes `<prefix>.{f,g,v}.bin` and `<prefix>.report.json`.
    #[arg(long)]
    pub out_prefix: PathBuf,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
}

#[derive(Debug, Args, Serialize)]
pub struct VerifyArgs {
    #[arg(long)]
    pub f: PathBuf,
    #[arg(long)]
    pub g: PathBuf,
    #[arg(long)]
    pub v: PathBuf,
    #[arg(long)]
    pub k: usize,
    #[arg(long, value_enum, default_value_t = DiffArg::Spectral)]
    pub scheme: DiffArg,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleDiffArgs {
    /// Field JSON; a seeded random field is used when absent.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 1000)]
    pub lines: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Polynomial degree of the random field.
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 200)]
    pub nodes: usize,
    /// Line offsets are drawn inside this radius.
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RankProbeArgs {
    #[arg(long)]
    pub n: usize,
    #[arg(long)]
    pub m: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 20)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Smallest acceptable sigma_min / sigma_max.
    #[arg(long, default_value_t = 1e-6)]
    pub min_ratio: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct KernelArgs {
    /// Potential JSON of rank m-k-1; a seeded random one when absent.
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 2)]
    pub m: usize,
    #[arg(long)]
    pub k: usize,
    #[arg(long, default_value_t = 500)]
    pub lines: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    #[arg(long, default_value_t = 2.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Smallest acceptable I^(k+1) magnitude for the negative control.
    #[arg(long, default_value_t = 1e-3)]
    pub control_min: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct RangeArgs {
    /// Moment data JSON from `transform`.
    #[arg(long, conflicts_with = "field")]
    pub moments: Option<PathBuf>,
    /// Field JSON; closed-form moments are used.
    #[arg(long)]
    pub field: Option<PathBuf>,
    /// Expected tensor rank; checked against the data.
    #[arg(long)]
    pub m: Option<usize>,
    #[arg(long)]
    pub k: usize,
    /// Decreasing finite-difference steps.
    #[arg(long, value_delimiter = ',', default_value = "0.05,0.025,0.0125")]
    pub steps: Vec<f64>,
    #[arg(long, default_value_t = 4)]
    pub points: usize,
    /// Random John tuples for n >= 3.
    #[arg(long, default_value_t = 64)]
    pub tuples: usize,
    #[arg(long, default_value_t = 200)]
    pub parity_lines: usize,
    #[arg(long, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Multiply phi^0 by 1 + eps x_1 before testing.
    #[arg(long)]
    pub corrupt: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ChiArgs {
    #[arg(long, default_value_t = 3)]
    pub n: usize,
    #[arg(long, default_value_t = 3)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub l: usize,
    #[arg(long, default_value_t = 8)]
    pub points: usize,
    /// Random index tuples for the Psi decomposition.
    #[arg(long, default_value_t = 4)]
    pub tuples: usize,
    #[arg(long, default_value_t = 1)]
    pub degree: u32,
    #[arg(long, value_delimiter = ',', default_value = "0.02,0.01")]
    pub steps: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SliceArgs {
    #[arg(long)]
    pub field: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    pub n: usize,
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    #[arg(long, default_value_t = 2)]
    pub degree: u32,
    /// Highest moment order checked.
    #[arg(long, default_value_t = 1)]
    pub q: usize,
    #[arg(long, default_value_t = 5)]
    pub trials: usize,
    /// Samples per axis of the offset grid.
    #[arg(long, default_value_t = 128)]
    pub samples: usize,
    #[arg(long, default_value_t = 8.0)]
    pub extent: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// What a subcommand produced.
pub struct Outcome {
    pub results: Value,
    pub tables: Vec<Table>,
    pub pass: bool,
    pub seed: Option<u64>,
    /// Report destination; `None` prints the JSON to stdout.
    pub report: Option<PathBuf>,
}

fn config_of<T: Serialize>(args: &T) -> Value {
    serde_json::to_value(args).unwrap_or(Value::Null)
}

/// Runs one subcommand and writes its report. Returns the overall verdict.
pub fn run(cli: Cli) -> Result<bool> {
    let start = Instant::now();
    let (name, config, outcome) = match &cli.command {
        Command::Transform(a) => ("transform", config_of(a), commands::transform(a)?),
        Command::Decompose(a) => ("decompose", config_of(a), commands::decompose(a)?),
        Command::Verify(a) => ("verify", config_of(a), commands::verify(a)?),
        Command::OracleDiff(a) => ("oracle-diff", config_of(a), commands::oracle_diff(a)?),
        Command::RankProbe(a) => ("rank-probe", config_of(a), commands::rank_probe(a)?),
        Command::CheckKernel(a) => ("check-kernel", config_of(a), commands::check_kernel(a)?),
        Command::CheckRange(a) => ("check-range", config_of(a), commands::check_range(a)?),
        Command::ChiVerify(a) => ("chi-verify", config_of(a), commands::chi_verify(a)?),
        Command::SliceCheck(a) => ("slice-check", config_of(a), commands::slice_check(a)?),
    };
    let wall = start.elapsed().as_secs_f64();
    let report = envelope(
        name,
        outcome.seed,
        config,
        wall,
        outcome.pass,
        outcome.results,
    );
    match &outcome.report {
        Some(path) => {
            for p in emit_report(path, &report, &outcome.tables)? {
                eprintln!("wrote {}", p.display());
            }
        }
        None => println!("{}", serde_json::to_string_pretty(&report)?),
    }
    eprintln!("{name}: {}", if outcome.pass { "pass" } else { "FAIL" });
    Ok(outcome.pass)
}

/// Thread setup, argument parsing and exit codes: 0 pass, 1 a verdict
/// failed, 2 invalid configuration or input.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    if let Ok(v) = std::env::var(THREADS_ENV) {
        match v.parse::<usize>() {
            Ok(t) if t > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(t)
                    .build_global();
            }
            _ => {
                eprintln!("error: {THREADS_ENV} must be a positive integer, got `{v}`");
                return ExitCode::from(2);
            }
        }
    }
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
