use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_khinchin"));
    c.env_remove("KHINCHIN_PRECISION").env_remove("KHINCHIN_BUDGET");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn schema(name: &str) -> jsonschema::JSONSchema {
    let path = format!("{}/schema/{name}", env!("CARGO_MANIFEST_DIR"));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::JSONSchema::compile(&v).unwrap()
}

fn assert_valid(s: &jsonschema::JSONSchema, v: &Value) {
    if let Err(errors) = s.validate(v) {
        let msgs: Vec<String> = errors.map(|e| format!("{} at {}", e, e.instance_path)).collect();
        panic!("schema violations: {msgs:?}");
    }
}

#[test]
fn bell_coefficient_with_factorial_scale() {
    let o = run(&["coeffs", "--series", "builtin:sets_of_sets", "--n", "5", "--scale", "factorial"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["value"], "52");
    let o = run(&["coeffs", "--series", "builtin:partitions", "--n", "4", "--from", "0", "--format", "csv"]);
    assert_eq!(stdout(&o), "n,value\n0,1\n1,1\n2,2\n3,3\n4,5\n");
}

#[test]
fn check_partitions_report() {
    let o = run(&["check", "--series", "builtin:partitions"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_valid(&schema("report.schema.json"), &v);
    assert_eq!(v["report"]["verdict"], "hayman");
    assert_eq!(v["report"]["criterion"], "quasigeometric");
    assert_eq!(v["config"]["truncation"], 1024);
    assert_eq!(v["version"], env!("CARGO_PKG_VERSION"));
}

#[test]
fn reports_validate_for_every_criterion_branch() {
    let s = schema("report.schema.json");
    for series in [
        "builtin:sets_of_sets",
        "builtin:monomial:k=2",
        "builtin:polynomial:coeffs=0;1;1",
        "builtin:square_partitions",
        "builtin:rooted_trees",
        "builtin:cycles",
    ] {
        let o = run(&["check", "--series", series, "--terms", "256", "--grid", "4:6"]);
        assert!(o.status.success(), "{series}: {}", String::from_utf8_lossy(&o.stderr));
        let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
        assert_valid(&s, &v);
    }
}

#[test]
fn failing_verdicts_exit_zero() {
    let o = run(&["check", "--series", "builtin:monomial:k=2", "--no-diagnostics"]);
    assert!(o.status.success());
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["report"]["verdict"], "fails_hypothesis");
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["check", "--series", "builtin:lists", "--terms", "256", "--grid", "4:6"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);
    let args = ["estimate", "--series", "builtin:partitions", "--n", "10:100:10", "--format", "csv"];
    assert_eq!(run(&args).stdout, run(&args).stdout);
}

#[test]
fn config_file_env_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"precision_bits": 128, "truncation": 512, "window": [100, 500]}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let args = ["check", "--series", "builtin:lists", "--no-diagnostics", "--config", cfg];
    let v: Value = serde_json::from_str(&stdout(&run(&args))).unwrap();
    assert_eq!(v["config"]["precision_bits"], 128);
    assert_eq!(v["config"]["window"], serde_json::json!([100, 500]));
    assert_eq!(v["report"]["fit"]["window"], serde_json::json!([100, 500]));

    let o = bin().args(args).env("KHINCHIN_PRECISION", "192").output().unwrap();
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["precision_bits"], 192);

    let o = bin().args(args).args(["--precision", "160"]).env("KHINCHIN_PRECISION", "192").output().unwrap();
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["precision_bits"], 160);

    std::fs::write(dir.path().join("bad.json"), r#"{"precision": 1}"#).unwrap();
    let o = run(&["check", "--series", "builtin:lists", "--config", dir.path().join("bad.json").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn json_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let o = run(&["check", "--series", "builtin:lists", "--no-diagnostics", "--json", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert_eq!(std::fs::read_to_string(&path).unwrap(), stdout(&o));
}

#[test]
fn errors_are_machine_readable() {
    let o = run(&["check", "--series", "file:/nonexistent/g.json"]);
    assert_eq!(o.status.code(), Some(1));
    let e: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(e["error"], "io");

    let o = run(&["exact", "--kind", "partitions", "--n", "100000", "--budget", "1000"]);
    let e: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(e["error"], "budget_exceeded");

    let o = run(&["estimate", "--series", "builtin:rooted_trees", "--n", "100000", "--terms", "64"]);
    let e: Value = serde_json::from_str(String::from_utf8(o.stderr).unwrap().trim()).unwrap();
    assert_eq!(e["error"], "mean_bounded");

    let o = run(&["reproduce", "no-such-fixture"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn estimate_lines_follow_schema() {
    let s = schema("estimate.schema.json");
    let o = run(&["estimate", "--series", "builtin:partitions", "--n", "100,200", "--scheme", "euler"]);
    assert!(o.status.success());
    let lines: Vec<Value> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for l in &lines {
        assert_valid(&s, l);
        assert!(l["log_ratio"].as_f64().unwrap().abs() < 0.05);
    }
    let o = run(&["estimate", "--series", "builtin:sets_of_sets", "--n", "20", "--format", "csv", "--oracle", "none"]);
    let text = stdout(&o);
    let mut rows = text.lines();
    assert_eq!(rows.next().unwrap(), "n,t,log_estimate,log_exact,log_ratio");
    assert!(rows.next().unwrap().ends_with(",,"));
}

#[test]
fn scheme_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("s.json");
    std::fs::write(&p, r#"{"scheme": "power_of_log", "a": 1.6449340668482264, "p": 2}"#).unwrap();
    let spec = format!("file:{}", p.display());
    let a = run(&["estimate", "--series", "builtin:partitions", "--n", "300", "--scheme", &spec, "--format", "csv"]);
    let b = run(&["estimate", "--series", "builtin:partitions", "--n", "300", "--scheme", "euler", "--format", "csv"]);
    let col = |o: &Output| stdout(o).lines().nth(1).unwrap().split(',').nth(2).unwrap().to_string();
    assert_eq!(col(&a), col(&b));
}

#[test]
fn small_commands() {
    let v: Value = serde_json::from_str(stdout(&run(&["divisors", "--m", "12", "--c", "1"])).trim()).unwrap();
    assert_eq!((v["sigma"].as_str(), v["sigma_odd"].as_str(), v["chi"].as_u64()), (Some("28"), Some("4"), Some(2)));
    let o = run(&["divisors", "--range", "1:10", "--c", "0", "--format", "csv"]);
    assert_eq!(stdout(&o).lines().count(), 11);
    let o = run(&["exact", "--kind", "partitions", "--n", "100", "--format", "csv"]);
    assert_eq!(stdout(&o), "n,value\n100,190569292\n");
    let o = run(&["eval", "--series", "builtin:cycles", "--t", "0.5", "--what", "char", "--theta", "0.3"]);
    let v: Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    // cycles: f(z) = 1/(1−z), so the characteristic function is (1−t)/(1−te^{iθ})
    let (c, s) = (0.3f64.cos(), 0.3f64.sin());
    let d = (1.0 - 0.5 * c).powi(2) + 0.25 * s * s;
    assert!((v["char"]["re"].as_f64().unwrap() - 0.5 * (1.0 - 0.5 * c) / d).abs() < 1e-12);
    assert!((v["char"]["im"].as_f64().unwrap() - 0.5 * 0.5 * s / d).abs() < 1e-12);
    let o = run(&["eval", "--series", "builtin:cycles", "--t", "0.5:0.999:4", "--what", "ratio", "--format", "csv"]);
    let text = stdout(&o);
    assert_eq!(text.lines().count(), 5);
    for l in text.lines().skip(1) {
        let r: f64 = l.split(',').nth(1).unwrap().parse().unwrap();
        assert!((r - 2.0).abs() < 1e-12);
    }
}

#[test]
fn reproduce_fixtures() {
    let text = stdout(&run(&["reproduce", "partitions-hardy-ramanujan"]));
    let rows: Vec<&str> = text.lines().collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[2].starts_with("100,190569292,"));
    let text = stdout(&run(&["reproduce", "bell-hayman"]));
    assert!(text.lines().nth(1).unwrap().starts_with("10,115975,"));
    let text = stdout(&run(&["reproduce", "forests-counterexample"]));
    let q: Vec<f64> = text.lines().skip(1).map(|l| l.split(',').nth(4).unwrap().parse().unwrap()).collect();
    assert_eq!(q.len(), 6);
    assert!(q.windows(2).all(|w| w[1] < w[0]));
}

#[test]
fn csv_series_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("g.csv");
    std::fs::write(&p, "0\n1\n1/2\n1/6\n1/24\n1/120\n1/720\n").unwrap();
    let o = run(&[
        "coeffs", "--series", p.to_str().unwrap(), "--csv-radius", "inf", "--n", "3", "--from", "0",
        "--format", "csv", "--scale", "factorial",
    ]);
    // g = e^z − 1 truncated: n!·a_n are the Bell numbers while n ≤ 6
    assert_eq!(stdout(&o), "n,value\n0,1\n1,1\n2,2\n3,5\n");
}
