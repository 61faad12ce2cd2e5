//! Subcommand bodies: parse, compute, render.

use std::fmt::Write as _;
use std::time::Instant;

use serde::Serialize;
use serde_json::json;
use thiserror::Error;

use stochord::ageing::{classify_ageing, failure_rate, hierarchy_check, AgeingConfig, AgeingReport};
use stochord::grid::{GridConfig, Spacing};
use stochord::ordering::curve::c_s_curve_at;
use stochord::ordering::{v_s, v_s_scan, CompareConfig, ComparisonProbe};
use stochord::selftest::{run_selftest, SelftestConfig, SuiteResult};
use stochord::{compare_sifr, Direction, DistributionSpec, IteratedTailEvaluator, OrderVerdict};

use crate::output::{csv_row, emit};
use crate::{
    ClassifyArgs, Cli, Command, CompareArgs, CurveArgs, CurveKind, Format, SelftestArgs, EXIT_BAD_INPUT,
    EXIT_FAILURE, EXIT_INCONCLUSIVE, EXIT_OK,
};

/// Upper tail left out of default curve grids.
const CURVE_UPPER_TAIL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0}")]
    Input(String),
    #[error(transparent)]
    Compute(stochord::Error),
    #[error("cannot write output: {0}")]
    Io(#[from] std::io::Error),
}

impl Failure {
    pub fn exit_code(&self) -> u8 {
        match self {
            Failure::Input(_) => EXIT_BAD_INPUT,
            Failure::Compute(_) | Failure::Io(_) => EXIT_FAILURE,
        }
    }

    pub fn to_json(&self) -> serde_json::Value {
        let kind = match self {
            Failure::Input(_) => "bad_input",
            Failure::Compute(stochord::Error::MomentUndefined { .. }) => "moment_undefined",
            Failure::Compute(_) => "computation",
            Failure::Io(_) => "io",
        };
        json!({ "error": self.to_string(), "kind": kind, "exit_code": self.exit_code() })
    }
}

impl From<stochord::Error> for Failure {
    fn from(e: stochord::Error) -> Self {
        use stochord::Error as E;
        match e {
            E::Parse { .. } | E::InvalidParameter { .. } | E::LevelOutOfRange { .. } | E::InvalidGrid(_) => {
                Failure::Input(e.to_string())
            }
            e => Failure::Compute(e),
        }
    }
}

fn parse_spec(flag: &str, raw: &str) -> Result<DistributionSpec, Failure> {
    raw.parse()
        .map_err(|e: stochord::Error| Failure::Input(format!("--{flag}: {e}")))
}

fn required<'a>(flag: &str, v: &'a Option<String>, kind: &str) -> Result<&'a str, Failure> {
    v.as_deref()
        .ok_or_else(|| Failure::Input(format!("--kind {kind} needs --{flag}")))
}

fn json_only(cli: &Cli, command: &str) -> Result<(), Failure> {
    match cli.format {
        Some(Format::Csv) => Err(Failure::Input(format!("{command} writes JSON only"))),
        _ => Ok(()),
    }
}

fn to_json<T: Serialize>(doc: &T) -> Result<String, Failure> {
    serde_json::to_string_pretty(doc).map_err(|e| Failure::Input(format!("cannot serialize result: {e}")))
}

pub fn run(cli: &Cli) -> Result<u8, Failure> {
    match &cli.command {
        Command::Classify(args) => classify(cli, args),
        Command::Compare(args) => compare(cli, args, false),
        Command::Scan(args) => compare(cli, args, true),
        Command::Curve(args) => curve(cli, args),
        Command::Selftest(args) => selftest(cli, args),
    }
}

#[derive(Serialize)]
struct ClassifyDoc<'a> {
    dist: String,
    #[serde(flatten)]
    report: &'a AgeingReport,
    hierarchy_check: bool,
}

fn classify(cli: &Cli, args: &ClassifyArgs) -> Result<u8, Failure> {
    json_only(cli, "classify")?;
    let spec = parse_spec("dist", &args.dist)?;
    let ev = IteratedTailEvaluator::new(spec, args.s)?;
    let cfg = AgeingConfig {
        n_points: args.points,
        ..AgeingConfig::default()
    };
    let report = classify_ageing(&ev, &cfg)?;
    let doc = ClassifyDoc {
        dist: spec.to_string(),
        report: &report,
        hierarchy_check: hierarchy_check(&report),
    };
    emit(cli.output.as_deref(), &to_json(&doc)?)?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct VerdictDoc<'a> {
    x: String,
    y: String,
    #[serde(flatten)]
    verdict: &'a OrderVerdict,
}

fn compare_config(args: &CompareArgs) -> Result<CompareConfig, Failure> {
    let mut cfg = CompareConfig::default();
    if let Some(n) = args.probe_a {
        cfg.probes.n_a = n;
    }
    if let Some(n) = args.probe_b {
        cfg.probes.n_b = n;
    }
    if let Some(n) = args.points_per_side {
        cfg.probes.points_per_side = n;
    }
    cfg.log_criterion = !args.no_log_criterion;
    cfg.probes.validate()?;
    Ok(cfg)
}

fn compare(cli: &Cli, args: &CompareArgs, scan_only: bool) -> Result<u8, Failure> {
    json_only(cli, if scan_only { "scan" } else { "compare" })?;
    let x = parse_spec("x", &args.x)?;
    let y = parse_spec("y", &args.y)?;
    let cfg = compare_config(args)?;
    let verdict = if scan_only {
        let ev_x = IteratedTailEvaluator::new(x, args.s)?;
        let ev_y = IteratedTailEvaluator::new(y, args.s)?;
        v_s_scan(&ev_x, &ev_y, &cfg.probes)?
    } else {
        compare_sifr(&x, &y, args.s, &cfg)?
    };
    let doc = VerdictDoc {
        x: x.to_string(),
        y: y.to_string(),
        verdict: &verdict,
    };
    emit(cli.output.as_deref(), &to_json(&doc)?)?;
    Ok(if verdict.direction == Direction::Inconclusive {
        EXIT_INCONCLUSIVE
    } else {
        EXIT_OK
    })
}

fn curve_grid(spec: &DistributionSpec, args: &CurveArgs) -> Result<Vec<f64>, Failure> {
    let x_max = match args.x_max {
        Some(v) => v,
        None => spec.quantile(1.0 - CURVE_UPPER_TAIL)?,
    };
    let grid = GridConfig::on(0.0, x_max)
        .with_points(args.points)
        .with_spacing(Spacing::LogLinear);
    Ok(grid.points()?)
}

#[derive(Serialize)]
struct CurveDoc {
    kind: &'static str,
    s: u32,
    rows: Vec<CurveRow>,
}

#[derive(Serialize)]
struct CurveRow {
    #[serde(skip_serializing_if = "Option::is_none")]
    a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    b: Option<f64>,
    x: f64,
    value: f64,
}

fn curve(cli: &Cli, args: &CurveArgs) -> Result<u8, Failure> {
    let mut rows: Vec<CurveRow> = Vec::new();
    let kind = match args.kind {
        CurveKind::Tail | CurveKind::Rate => {
            let name = if args.kind == CurveKind::Tail { "tail" } else { "rate" };
            let spec = parse_spec("dist", required("dist", &args.dist, name)?)?;
            let ev = IteratedTailEvaluator::new(spec, args.s)?;
            for x in curve_grid(&spec, args)? {
                let value = match args.kind {
                    CurveKind::Tail => ev.tail(x)?,
                    _ => failure_rate(&ev, x)?,
                };
                rows.push(CurveRow { a: None, b: None, x, value });
            }
            name
        }
        CurveKind::CS | CurveKind::VS => {
            let name = if args.kind == CurveKind::CS { "c_s" } else { "v_s" };
            let x = parse_spec("x", required("x", &args.x, name)?)?;
            let y = parse_spec("y", required("y", &args.y, name)?)?;
            let ev_x = IteratedTailEvaluator::new(x, args.s)?;
            let ev_y = IteratedTailEvaluator::new(y, args.s)?;
            let xs = curve_grid(&x, args)?;
            if args.kind == CurveKind::CS {
                let c = c_s_curve_at(&ev_x, &ev_y, &xs, stochord::Execution::default())?;
                rows.extend(c.xs.iter().zip(&c.ys).map(|(&x, &value)| CurveRow { a: None, b: None, x, value }));
            } else {
                for &a in &args.a {
                    for &b in &args.b {
                        let probe = ComparisonProbe::new(a, b)?;
                        for &x in &xs {
                            let value = v_s(&ev_x, &ev_y, probe, x)?;
                            rows.push(CurveRow { a: Some(a), b: Some(b), x, value });
                        }
                    }
                }
            }
            name
        }
    };
    let content = match cli.format.unwrap_or(Format::Csv) {
        Format::Json => to_json(&CurveDoc { kind, s: args.s, rows })?,
        Format::Csv => {
            let mut out = String::from(if args.kind == CurveKind::VS { "a,b,x,value\n" } else { "x,value\n" });
            for r in &rows {
                out.push_str(&csv_row(r.a.zip(r.b), r.x, r.value));
            }
            out
        }
    };
    emit(cli.output.as_deref(), &content)?;
    Ok(EXIT_OK)
}

fn table(results: &[SuiteResult]) -> String {
    let width = results.iter().map(|r| r.name.len()).max().unwrap_or(0);
    let mut out = String::new();
    for r in results {
        let mark = if r.passed { "pass" } else { "FAIL" };
        let _ = writeln!(out, "{mark}  {:<width$}  {:>7.3}s  {}", r.name, r.seconds, r.detail);
    }
    let passed = results.iter().filter(|r| r.passed).count();
    let _ = writeln!(out, "{passed}/{} suites passed", results.len());
    out
}

fn selftest(cli: &Cli, args: &SelftestArgs) -> Result<u8, Failure> {
    if !(args.tolerance_scale >= 0.0 && args.tolerance_scale.is_finite()) {
        return Err(Failure::Input(format!(
            "--tolerance-scale must be finite and nonnegative, got {}",
            args.tolerance_scale
        )));
    }
    let cfg = SelftestConfig {
        quick: args.quick,
        tolerance_scale: args.tolerance_scale,
        seed: cli.seed,
        ..SelftestConfig::default()
    };
    let start = Instant::now();
    let results = run_selftest(&cfg);
    let failed: Vec<&str> = results.iter().filter(|r| !r.passed).map(|r| r.name).collect();
    let content = match cli.format {
        Some(Format::Json) => to_json(&json!({
            "passed": failed.is_empty(),
            "failed": failed,
            "seconds": start.elapsed().as_secs_f64(),
            "suites": results,
        }))?,
        Some(Format::Csv) => {
            let mut out = String::from("name,passed,seconds\n");
            for r in &results {
                let _ = writeln!(out, "{},{},{}", r.name, r.passed, r.seconds);
            }
            out
        }
        None => table(&results),
    };
    emit(cli.output.as_deref(), &content)?;
    if failed.is_empty() {
        Ok(EXIT_OK)
    } else {
        eprintln!("stochord: failed invariants: {}", failed.join(", "));
        Ok(EXIT_FAILURE)
    }
}
