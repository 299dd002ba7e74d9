use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn measures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/measures")
}

fn spec(name: &str) -> String {
    measures().join(name).display().to_string()
}

fn wq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wq")).args(args).env_remove("WQ_DEFAULT_JOBS").output().unwrap()
}

fn json_of(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn csv_rows(out: &Output) -> Vec<Vec<String>> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_owned).collect())
        .collect()
}

#[test]
fn quantize_two_points_on_segment() {
    let out = wq(&["quantize", "--measure", &spec("uniform1d.json"), "--n", "2", "--p", "2", "--seed", "7"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json_of(&out);
    let mut xs: Vec<f64> = v["result"]["points"].as_array().unwrap().iter().map(|p| p[0].as_f64().unwrap()).collect();
    xs.sort_by(f64::total_cmp);
    assert!((xs[0] - 0.25).abs() < 1e-3 && (xs[1] - 0.75).abs() < 1e-3, "{xs:?}");
    assert_eq!(v["version"], wq::VERSION);
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["N"], 2);
}

#[test]
fn quantize_cantor_single_point() {
    let out = wq(&["quantize", "--measure", &spec("cantor.json"), "--n", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let x = json_of(&out)["result"]["points"][0][0].as_f64().unwrap();
    assert!((x - 0.5).abs() < 1e-9);
}

#[test]
fn usage_errors_exit_one() {
    let out = wq(&["quantize", "--measure", &spec("uniform1d.json"), "--n", "0"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("N must be ≥ 1"));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"type": "sphere"}"#).unwrap();
    let out = wq(&["quantize", "--measure", bad.to_str().unwrap(), "--n", "2"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("malformed measure spec"));

    assert_eq!(wq(&["quantize", "--measure", "/nonexistent.json", "--n", "2"]).status.code(), Some(1));
    assert_eq!(wq(&["rate-scan", "--exact", "--n-list", ""]).status.code(), Some(1));
    assert_eq!(wq(&["check", "--trials", "0"]).status.code(), Some(1));
    assert_eq!(wq(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(wq(&["--version"]).status.code(), Some(0));
}

#[test]
fn non_convergence_exits_two_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("q.json");
    let out = wq(&[
        "quantize",
        "--measure",
        &spec("square.json"),
        "--n",
        "16",
        "--max-iters",
        "1",
        "--quad",
        "grid:64",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["result"]["converged"], false);
    assert_eq!(v["result"]["points"].as_array().unwrap().len(), 16);
}

#[test]
fn exact_cantor_rate_scan() {
    let out = wq(&["rate-scan", "--exact", "--p", "2", "--n-list", "1,2,3,4,6,8,16,32,64,128", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("N,Wp,scaled,seed\n"));
    let footer = text.lines().find(|l| l.starts_with("# slope=")).unwrap();
    let slope: f64 = footer["# slope=".len()..].split(',').next().unwrap().parse().unwrap();
    assert!((slope + 1.585).abs() < 0.05, "{slope}");
}

#[test]
fn square_rate_scan_slope() {
    let out = wq(&[
        "rate-scan",
        "--measure",
        &spec("square.json"),
        "--n-list",
        "8,16,32,64",
        "--quad",
        "grid:128",
        "--restarts",
        "2",
        "--tol",
        "1e-6",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json_of(&out);
    let slope = v["result"]["fitted_slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() < 0.05, "{slope}");
    assert_eq!(v["result"]["expected_slope"].as_f64().unwrap(), -0.5);
}

#[test]
fn cantor_table_oscillates() {
    let out = wq(&["cantor", "--p", "1", "--n-max", "96", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 96);
    let scaled: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    let window = &scaled[31..];
    let lo = window.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = window.iter().copied().fold(0.0, f64::max);
    assert!((lo - 1.0 / 3.0).abs() < 1e-9, "{lo}");
    assert!((hi - 0.4226).abs() < 1e-3, "{hi}");

    let out = wq(&["cantor", "--p", "2", "--n-max", "4", "--format", "csv"]);
    let rows = csv_rows(&out);
    assert_eq!(rows.iter().map(|r| r[0].as_str()).collect::<Vec<_>>(), ["1", "2", "3", "4"]);
    let first: f64 = rows[0][1].parse().unwrap();
    assert!((first - 1.0 / 8f64.sqrt()).abs() < 1e-11);

    let out = wq(&["cantor", "--n-max", "1", "--format", "csv"]);
    assert_eq!(csv_rows(&out).len(), 1);
}

#[test]
fn check_reports_and_catches_faults() {
    let out = wq(&["check"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v = json_of(&out);
    assert_eq!(v["result"]["all_passed"], true);
    for p in v["result"]["properties"].as_array().unwrap() {
        assert_eq!(p["passed"], 200, "{p}");
    }

    let out = wq(&["check", "--trials", "5", "--inject-fault"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("marginal violation"));
    let v = json_of(&out);
    assert_eq!(v["result"]["all_passed"], false);
    let fault = v["result"]["properties"].as_array().unwrap().iter().find(|p| p["name"] == "faulty_plan").unwrap();
    assert!(fault["first_failure"].as_str().unwrap().contains("marginal violation"));
}

#[test]
fn theta_on_segment() {
    let out = wq(&["theta", "--d", "1", "--p", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json_of(&out);
    let t = v["result"]["theta_hat"].as_f64().unwrap();
    assert!((t / 0.288675 - 1.0).abs() < 0.01, "{t}");
}

#[test]
fn equidistribution_on_square() {
    let out = wq(&["equidist", "--cells", "4", "--n", "4096"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let cv = json_of(&out)["result"]["report"]["coefficient_of_variation"].as_f64().unwrap();
    assert!(cv < 0.10, "{cv}");
}

#[test]
fn support_law_on_ramp() {
    let out = wq(&["support-law", "--measure", &spec("ramp1d.json"), "--p", "2", "--n", "512"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let ks = json_of(&out)["result"]["report"]["ks"].as_f64().unwrap();
    assert!(ks < 0.05, "{ks}");
}

#[test]
fn reports_are_byte_identical_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str, jobs: &str| {
        let path = dir.path().join(name);
        let out = Command::new(env!("CARGO_BIN_EXE_wq"))
            .args([
                "quantize",
                "--measure",
                &spec("square.json"),
                "--n",
                "12",
                "--quad",
                "grid:64",
                "--seed",
                "11",
                "--format",
                "csv",
                "--out",
                path.to_str().unwrap(),
            ])
            .env("WQ_DEFAULT_JOBS", jobs)
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        std::fs::read(path).unwrap()
    };
    // same path each time, since the output path is echoed in the config
    let a = run("q.csv", "1");
    let b = run("q.csv", "3");
    let c = run("q.csv", "1");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let text = String::from_utf8(a).unwrap();
    assert!(text.starts_with(&format!("# {}\n# config=", wq::VERSION)));
}
