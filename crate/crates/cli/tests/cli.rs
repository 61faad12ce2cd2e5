use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use stochord::ageing::failure_rate;
use stochord::{DistributionSpec, IteratedTailEvaluator};

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stochord"));
    cmd.env_remove("STOCHORD_THREADS");
    cmd
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("stdout is not JSON ({e}): {}", String::from_utf8_lossy(&out.stdout))
    })
}

fn schema(name: &str) -> Value {
    let path: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "schemas", name].iter().collect();
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn assert_valid(schema_name: &str, doc: &Value) {
    let schema = schema(schema_name);
    let compiled = jsonschema::JSONSchema::compile(&schema).expect("schema compiles");
    let msgs: Vec<String> = match compiled.validate(doc) {
        Ok(()) => return,
        Err(errors) => errors.map(|e| format!("{} at {}", e, e.instance_path)).collect(),
    };
    panic!("{schema_name} rejects document: {msgs:?}\n{doc:#}");
}

fn csv_rows(text: &str) -> (String, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().expect("header").to_string();
    let rows = lines
        .map(|l| l.split(',').map(|c| c.parse().expect("number")).collect())
        .collect();
    (header, rows)
}

#[test]
fn classify_gamma_is_ifr() {
    let out = run(&["classify", "--dist", "gamma:2:1", "--s", "1"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("classify.json", &doc);
    assert_eq!(doc["s_ifr"], true);
    assert_eq!(doc["s_dfr"], false);
    assert_eq!(doc["hierarchy_check"], true);
}

#[test]
fn classify_weibull_below_one_is_dfr_at_level_two() {
    let out = run(&["classify", "--dist", "weibull:0.5:1", "--s", "2"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("classify.json", &doc);
    assert_eq!(doc["s_dfr"], true);
    assert_eq!(doc["s_ifr"], false);
}

#[test]
fn classify_exponential_is_both() {
    let out = run(&["classify", "--dist", "exponential:1", "--s", "1"]);
    let doc = json(&out);
    assert_valid("classify.json", &doc);
    assert_eq!((doc["s_ifr"].clone(), doc["s_dfr"].clone()), (Value::Bool(true), Value::Bool(true)));
    assert_eq!(doc["rate_monotonicity"], "constant");
}

#[test]
fn undefined_moment_reports_error_field() {
    let out = run(&["classify", "--dist", "inverse_gamma:1.5:1", "--s", "3"]);
    assert_eq!(code(&out), 1);
    let doc = json(&out);
    assert_eq!(doc["kind"], "moment_undefined");
    assert!(doc["error"].as_str().unwrap().contains("moment"));
}

#[test]
fn bad_input_exits_two() {
    for args in [
        vec!["classify", "--dist", "gamma:-1:1"],
        vec!["classify", "--dist", "lognormal:1:1"],
        vec!["classify", "--dist", "exponential:1:2"],
        vec!["classify", "--dist", "gamma:2:1", "--s", "0"],
        vec!["compare", "--x", "gamma:2:1"],
        vec!["compare", "--x", "gamma:2:1", "--y", "gamma:3:1", "--format", "csv"],
        vec!["compare", "--x", "gamma:2:1", "--y", "gamma:3:1", "--points-per-side", "2"],
        vec!["curve", "--kind", "tail"],
        vec!["curve", "--kind", "spline", "--dist", "gamma:2:1"],
        vec!["selftest", "--tolerance-scale", "-1"],
        vec!["frobnicate"],
    ] {
        assert_eq!(code(&run(&args)), 2, "{args:?}");
    }
}

#[test]
fn compare_gamma_shapes() {
    let out = run(&["compare", "--x", "gamma:3:1", "--y", "gamma:2:1", "--s", "2"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("verdict.json", &doc);
    assert_eq!(doc["direction"], "x_more_sifr");
    assert_eq!(doc["method"], "proven_by_theorem");
}

#[test]
fn compare_inverse_gamma_with_exponential() {
    let out = run(&["compare", "--x", "inverse_gamma:1:1", "--y", "exponential:1", "--s", "1"]);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("verdict.json", &doc);
    assert_eq!(doc["direction"], "not_comparable");
}

#[test]
fn compare_scale_family() {
    let out = run(&["compare", "--x", "weibull:2:1", "--y", "weibull:2:5", "--s", "1"]);
    let doc = json(&out);
    assert_valid("verdict.json", &doc);
    assert_eq!(doc["direction"], "equivalent");
    assert_eq!(doc["evidence"]["kind"], "scale_equivalence");
}

#[test]
fn scan_verdicts_validate() {
    let quick = ["--probe-a", "9", "--probe-b", "9", "--points-per-side", "128"];
    let mut args = vec!["scan", "--x", "gamma:3:1", "--y", "weibull:2:1"];
    args.extend(quick);
    let out = run(&args);
    assert_eq!(code(&out), 0);
    let doc = json(&out);
    assert_valid("verdict.json", &doc);
    assert_eq!(doc["direction"], "not_comparable");
    assert!(doc["evidence"]["forward"]["certificate"].is_object());

    let mut args = vec!["compare", "--x", "gamma:0.5:1", "--y", "gamma:0.3:1", "--s", "2"];
    args.extend(quick);
    let doc = json(&run(&args));
    assert_valid("verdict.json", &doc);
}

#[test]
fn inconclusive_exits_three() {
    let out = run(&[
        "scan", "--x", "gamma:2:1", "--y", "gamma:2.0001:1", "--probe-a", "3", "--probe-b", "3",
        "--points-per-side", "32",
    ]);
    assert_eq!(code(&out), 3);
    let doc = json(&out);
    assert_valid("verdict.json", &doc);
    assert_eq!(doc["direction"], "inconclusive");
}

#[test]
fn exponential_tail_rows_match_and_round_trip() {
    let out = run(&["curve", "--kind", "tail", "--dist", "exponential:1", "--s", "3"]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(header, "x,value");
    assert!(rows.len() > 400);
    let ev = IteratedTailEvaluator::new(DistributionSpec::exponential(1.0).unwrap(), 3).unwrap();
    for r in &rows {
        assert!((r[1] - (-r[0]).exp()).abs() <= 1e-12, "{r:?}");
        assert_eq!(r[1].to_bits(), ev.tail(r[0]).unwrap().to_bits());
    }
}

#[test]
fn weibull_rate_rows_are_linear() {
    let out = run(&["curve", "--kind", "rate", "--dist", "weibull:2:1", "--s", "1"]);
    let (_, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    let ev = IteratedTailEvaluator::new(DistributionSpec::weibull(2.0, 1.0).unwrap(), 1).unwrap();
    for r in &rows {
        assert!((r[1] - 2.0 * r[0]).abs() <= 1e-9 * (1.0 + r[0]), "{r:?}");
        assert_eq!(r[1].to_bits(), failure_rate(&ev, r[0]).unwrap().to_bits());
    }
}

#[test]
fn identical_laws_give_identity_c_s() {
    let out = run(&["curve", "--kind", "c_s", "--x", "gamma:2:1", "--y", "gamma:2:1", "--s", "1"]);
    let (header, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(header, "x,value");
    for r in &rows {
        assert!((r[1] - r[0]).abs() <= 1e-8 * (1.0 + r[0]), "{r:?}");
    }
}

#[test]
fn v_s_rows_carry_the_probe() {
    let out = run(&[
        "curve", "--kind", "v_s", "--x", "gamma:2:1", "--y", "weibull:2:1", "--a", "1,2", "--b", "-0.5,0",
        "--points", "32",
    ]);
    assert_eq!(code(&out), 0);
    let (header, rows) = csv_rows(std::str::from_utf8(&out.stdout).unwrap());
    assert_eq!(header, "a,b,x,value");
    let mut probes: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
    probes.dedup();
    assert_eq!(probes, vec![(1.0, -0.5), (1.0, 0.0), (2.0, -0.5), (2.0, 0.0)]);
    assert!(rows.iter().all(|r| r[3].abs() <= 1.0));
}

#[test]
fn curve_json_format() {
    let out = run(&["curve", "--kind", "tail", "--dist", "gamma:2:1", "--points", "16", "--format", "json"]);
    let doc = json(&out);
    assert_eq!(doc["kind"], "tail");
    assert_eq!(doc["rows"][0]["value"], 1.0);
}

fn assert_only(dir: &Path, name: &str) {
    let names: Vec<String> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().to_string_lossy().into_owned())
        .collect();
    assert_eq!(names, vec![name.to_string()], "no temporary files left behind");
}

#[test]
fn output_file_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("tail.csv");
    std::fs::write(&path, "stale").unwrap();
    let out = run(&[
        "curve", "--kind", "tail", "--dist", "gamma:2:1", "--points", "64", "-o", path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    assert!(out.stdout.is_empty());
    let (header, rows) = csv_rows(&std::fs::read_to_string(&path).unwrap());
    assert_eq!(header, "x,value");
    assert_eq!(rows.len(), 64);
    assert_only(dir.path(), "tail.csv");
}

#[test]
fn selftest_quick_passes() {
    let out = run(&["selftest", "--quick"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stdout));
    let table = String::from_utf8(out.stdout).unwrap();
    assert!(table.lines().filter(|l| l.starts_with("pass")).count() >= 20);
}

#[test]
fn selftest_fault_injection_fails() {
    let out = run(&["selftest", "--quick", "--tolerance-scale", "0", "--format", "json"]);
    assert_eq!(code(&out), 1);
    let doc = json(&out);
    assert_eq!(doc["passed"], false);
    assert!(!doc["failed"].as_array().unwrap().is_empty());
    assert!(String::from_utf8_lossy(&out.stderr).contains("failed invariants"));
}

#[test]
fn thread_cap_is_honoured_and_validated() {
    let ok = bin()
        .env("STOCHORD_THREADS", "2")
        .args(["classify", "--dist", "gamma:2:1"])
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
    let bad = bin()
        .env("STOCHORD_THREADS", "zero")
        .args(["classify", "--dist", "gamma:2:1"])
        .output()
        .unwrap();
    assert_eq!(code(&bad), 2);
}

#[test]
fn same_seed_same_output() {
    let a = run(&["selftest", "--quick", "--seed", "11", "--format", "csv"]);
    let b = run(&["selftest", "--quick", "--seed", "11", "--format", "csv"]);
    let strip = |o: &Output| -> Vec<String> {
        String::from_utf8_lossy(&o.stdout)
            .lines()
            .map(|l| l.rsplit_once(',').map_or(l, |(h, _)| h).to_string())
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}
