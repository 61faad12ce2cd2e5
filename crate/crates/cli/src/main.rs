//! `stochord`: batch front end for ageing classification, s-IFR
//! comparison, curve export and self-test.
//!
//! Exit codes: 0 success, 1 computation error or failed self-test, 2 bad
//! input, 3 inconclusive comparison.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::commands::Failure;

pub const EXIT_OK: u8 = 0;
pub const EXIT_FAILURE: u8 = 1;
pub const EXIT_BAD_INPUT: u8 = 2;
pub const EXIT_INCONCLUSIVE: u8 = 3;

const THREADS_ENV: &str = "STOCHORD_THREADS";

#[derive(Debug, Parser)]
#[command(name = "stochord", version, about = "Iterated tails, ageing classes and the s-IFR order")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,

    /// Write the result here (atomically) instead of stdout.
    #[arg(long, short = 'o', global = true)]
    pub output: Option<PathBuf>,

    #[arg(long, value_enum, global = true)]
    pub format: Option<Format>,

    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = stochord::mc::McConfig::default().seed)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify one distribution into the s-ageing classes.
    Classify(ClassifyArgs),
    /// Decide the s-IFR order between two distributions.
    Compare(CompareArgs),
    /// Export sampled tails, rates, c_s or V_s as CSV.
    Curve(CurveArgs),
    /// Run only the V_s probe scan in both directions.
    Scan(CompareArgs),
    /// Run the built-in invariant suites.
    Selftest(SelftestArgs),
}

#[derive(Debug, Args)]
pub struct ClassifyArgs {
    /// Distribution as family:shape:scale, or exponential:scale.
    #[arg(long)]
    pub dist: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub s: u32,
    /// Grid points for the rate sweep.
    #[arg(long, default_value_t = 4096)]
    pub points: usize,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub x: String,
    #[arg(long)]
    pub y: String,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub s: u32,
    /// Number of probe slopes.
    #[arg(long)]
    pub probe_a: Option<usize>,
    /// Number of probe offsets.
    #[arg(long)]
    pub probe_b: Option<usize>,
    /// Tail levels sampled per distribution.
    #[arg(long)]
    pub points_per_side: Option<usize>,
    /// Skip the log-criterion stage.
    #[arg(long)]
    pub no_log_criterion: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum CurveKind {
    Tail,
    Rate,
    #[value(name = "c_s")]
    CS,
    #[value(name = "v_s")]
    VS,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[arg(long, value_enum)]
    pub kind: CurveKind,
    /// Distribution for `tail` and `rate`.
    #[arg(long)]
    pub dist: Option<String>,
    /// Inner distribution for `c_s` and `v_s`.
    #[arg(long)]
    pub x: Option<String>,
    /// Outer distribution for `c_s` and `v_s`.
    #[arg(long)]
    pub y: Option<String>,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u32).range(1..))]
    pub s: u32,
    #[arg(long, default_value_t = 512)]
    pub points: usize,
    /// Right end of the grid; defaults to the 1 − 1e-6 quantile.
    #[arg(long)]
    pub x_max: Option<f64>,
    /// Probe slopes for `v_s`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "1")]
    pub a: Vec<f64>,
    /// Probe offsets for `v_s`, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0", allow_hyphen_values = true)]
    pub b: Vec<f64>,
}

#[derive(Debug, Args)]
pub struct SelftestArgs {
    /// Reduced grids and 10⁴ Monte Carlo draws.
    #[arg(long)]
    pub quick: bool,
    /// Multiplies every tolerance; 0 makes the suites fail.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_ENV} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Input(format!("cannot configure {n} threads: {e}")))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_BAD_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| commands::run(&cli));
    match result {
        Ok(code) => ExitCode::from(code),
        Err(failure) => {
            let code = failure.exit_code();
            eprintln!("stochord: {failure}");
            if let Ok(doc) = serde_json::to_string_pretty(&failure.to_json()) {
                if output::emit(cli.output.as_deref(), &doc).is_err() {
                    println!("{doc}");
                }
            }
            ExitCode::from(code)
        }
    }
}
