use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_simplex-slice");

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("SIMPLEXSLICE_THREADS")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn band_body(d: usize, lo: f64, hi: f64, second: bool) -> String {
    let ones = vec!["1"; d].join(",");
    let negs = vec!["-1"; d].join(",");
    let mut hs = format!(
        r#"{{"normal": [{ones}], "offset": {hi}}}, {{"normal": [{negs}], "offset": {}}}"#,
        -lo
    );
    if second {
        let mut n = vec!["0"; d];
        n[0] = "1";
        n[1] = "-1";
        hs.push_str(&format!(
            r#", {{"normal": [{}], "offset": 0.1}}"#,
            n.join(",")
        ));
    }
    format!(r#"{{"simplex": "unit:{d}", "halfspaces": [{hs}]}}"#)
}

const INDICATOR_ARGS: [&str; 12] = [
    "--window",
    "20",
    "--m",
    "10",
    "--n",
    "20000",
    "--min-days",
    "40",
    "--seed",
    "7",
    "--threads",
    "1",
];

fn run_indicator(out: &Path, extra: &[&str]) -> Output {
    let returns = data("synthetic_returns.csv");
    let mut args = vec!["indicator", "--returns", s(&returns), "--out-dir", s(out)];
    args.extend(INDICATOR_ARGS);
    args.extend(extra);
    run(&args)
}

#[test]
fn varsi_fraction_in_result() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(
        dir.path(),
        "one.json",
        r#"{"simplex": "unit:3", "halfspaces": [{"normal": [1, 2, 3], "offset": 1}]}"#,
    );
    let out = dir.path().join("out");
    let o = run(&[
        "volume",
        "--method",
        "varsi",
        "--body",
        s(&body),
        "--out-dir",
        s(&out),
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&out.join("result.json"));
    assert_eq!(r["method"], "varsi");
    assert!((r["fraction"].as_f64().unwrap() - 1.0 / 6.0).abs() < 1e-15);
    assert!((r["value"].as_f64().unwrap() - 1.0 / 36.0).abs() < 1e-15);
    assert!(r["wall_time_seconds"].as_f64().is_some());
}

#[test]
fn auto_dispatches_two_families_to_rational_lawrence() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(dir.path(), "b.json", &band_body(50, 0.5, 0.6, true));
    let o = run(&[
        "volume",
        "--body",
        s(&body),
        "--out-dir",
        s(dir.path()),
        "--seed",
        "1",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("result.json"));
    assert_eq!(r["method"], "lawrence");
    assert_eq!(r["lawrence"]["backend"], "rational");
    assert_eq!(r["auto"]["families"], 2);
    let dec: f64 = r["decimal"].as_str().unwrap().parse().unwrap();
    assert!((dec / r["value"].as_f64().unwrap() - 1.0).abs() < 1e-12);
}

#[test]
fn lawrence_band_matches_varsi_difference() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(dir.path(), "b.json", &band_body(6, 0.3, 0.45, false));
    for backend in ["float", "rational"] {
        let out = dir.path().join(backend);
        let o = run(&[
            "volume",
            "--method",
            "lawrence",
            "--backend",
            backend,
            "--body",
            s(&body),
            "--out-dir",
            s(&out),
            "--seed",
            "2",
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let v = json(&out.join("result.json"))["value"].as_f64().unwrap();
        let exact = (0.45f64.powi(6) - 0.3f64.powi(6)) / 720.0;
        assert!((v / exact - 1.0).abs() < 1e-9, "{backend}: {v} vs {exact}");
    }
}

#[test]
fn malformed_body_is_a_data_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(
        dir.path(),
        "bad.json",
        r#"{"simplex": "unit:2", "halfspaces": [{"normal": [1]}]}"#,
    );
    let o = run(&["volume", "--body", s(&body), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 3);
    assert!(stderr(&o).contains("body schema"), "{}", stderr(&o));
    assert!(!dir.path().join("result.json").exists());
}

#[test]
fn missing_input_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nope.csv");
    let o = run(&[
        "indicator",
        "--returns",
        s(&missing),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 3);
    let o = run(&["volume", "--body", s(&missing), "--out-dir", s(dir.path())]);
    assert_eq!(code(&o), 3);
}

#[test]
fn incompatible_method_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(dir.path(), "b.json", &band_body(4, 0.2, 0.4, false));
    let o = run(&[
        "volume",
        "--method",
        "varsi",
        "--body",
        s(&body),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("--method varsi"), "{}", stderr(&o));
    let o = run(&[
        "volume",
        "--method",
        "nonconvex",
        "--body",
        s(&body),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
    let manifest = json(&dir.path().join("manifest.json"));
    assert_eq!(manifest["status"], "failed");
    let o = run(&["volume", "--nonsense"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn nonconvex_refused_above_35_dimensions() {
    let dir = tempfile::tempdir().unwrap();
    let d = 36;
    let eye: Vec<String> = (0..d)
        .map(|i| {
            let row: Vec<&str> = (0..d).map(|j| if i == j { "1" } else { "0" }).collect();
            format!("[{}]", row.join(","))
        })
        .collect();
    let m = eye.join(",");
    let body = format!(
        r#"{{"simplex": "unit:{d}", "ellipsoids": [{{"matrix": [{m}], "level": 0.5}}, {{"matrix": [{m}], "level": 0.01, "side": "outside"}}]}}"#
    );
    let body = write(dir.path(), "shell.json", &body);
    let o = run(&[
        "volume",
        "--method",
        "nonconvex",
        "--body",
        s(&body),
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("allow"), "{}", stderr(&o));
}

#[test]
fn walk_result_records_phases() {
    let dir = tempfile::tempdir().unwrap();
    let body = write(
        dir.path(),
        "e.json",
        r#"{"simplex": "unit:3", "ellipsoids": [{"matrix": [[1,0,0],[0,1,0],[0,0,1]], "level": 0.04}]}"#,
    );
    let o = run(&[
        "volume",
        "--method",
        "hnr",
        "--epsilon",
        "0.3",
        "--walk-length",
        "12",
        "--body",
        s(&body),
        "--out-dir",
        s(dir.path()),
        "--seed",
        "5",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&dir.path().join("result.json"));
    let est = &r["estimate"];
    assert_eq!(est["walk_length"], 12);
    assert!(est["points_per_phase"].as_u64().unwrap() > 0);
    assert!(est["phase_ratios"].is_array());
    // eighth of a ball of radius 0.2
    let exact = std::f64::consts::PI * 0.008 / 6.0;
    let v = r["value"].as_f64().unwrap();
    assert!((v / exact - 1.0).abs() < 0.1, "{v} vs {exact}");
}

#[test]
fn indicator_matches_golden_warnings() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_indicator(dir.path(), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let got = std::fs::read_to_string(dir.path().join("warnings.csv")).unwrap();
    let want = std::fs::read_to_string(data("golden_warnings.csv")).unwrap();
    assert_eq!(got, want);
    let series = std::fs::read_to_string(dir.path().join("indicator.csv")).unwrap();
    assert!(series.starts_with("date,value\n"));
    assert_eq!(series.lines().count(), 1 + 400 - 19);
}

#[test]
fn single_thread_reruns_are_byte_identical() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_indicator(a.path(), &[])), 0);
    assert_eq!(code(&run_indicator(b.path(), &[])), 0);
    for f in ["indicator.csv", "warnings.csv"] {
        assert_eq!(
            std::fs::read(a.path().join(f)).unwrap(),
            std::fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
    let c = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_indicator(c.path(), &["--threads", "4"])), 0);
    assert_eq!(
        std::fs::read(a.path().join("indicator.csv")).unwrap(),
        std::fs::read(c.path().join("indicator.csv")).unwrap()
    );
}

#[test]
fn manifest_records_inputs_and_replays() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first");
    let returns = data("synthetic_returns.csv");
    let o = run(&[
        "copula",
        "--returns",
        s(&returns),
        "--window",
        "30",
        "--m",
        "10",
        "--n",
        "5000",
        "--threads",
        "1",
        "--out-dir",
        s(&first),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let m = json(&first.join("manifest.json"));
    assert_eq!(m["status"], "complete");
    assert_eq!(m["seed_generated"], true);
    assert_eq!(m["inputs"][0]["sha256"].as_str().unwrap().len(), 64);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    let seed = m["seed"].as_u64().unwrap();
    let sidecar = json(&first.join("copula.json"));
    assert_eq!(sidecar["seed"].as_u64().unwrap(), seed);
    let second = dir.path().join("second");
    let mut argv: Vec<String> = m["argv"]
        .as_array()
        .unwrap()
        .iter()
        .skip(1)
        .map(|v| v.as_str().unwrap().to_string())
        .collect();
    argv.push(format!("--out-dir={}", second.display()));
    let argv: Vec<&str> = argv.iter().map(String::as_str).collect();
    assert_eq!(code(&run(&argv)), 0);
    for f in ["copula.csv", "copula.json"] {
        assert_eq!(
            std::fs::read(first.join(f)).unwrap(),
            std::fs::read(second.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref");
    assert_eq!(code(&run_indicator(&reference, &[])), 0);
    let cfg = write(
        dir.path(),
        "run.cfg",
        "# indicator settings\nwindow = 20\nm=10\nn = 20000\nmin_days=40\nseed=7\n",
    );
    let out = dir.path().join("cfg");
    let returns = data("synthetic_returns.csv");
    let o = run(&[
        "indicator",
        "--returns",
        s(&returns),
        "--window",
        "50",
        "--m",
        "30",
        "--seed",
        "99",
        "--threads",
        "1",
        "--config",
        s(&cfg),
        "--out-dir",
        s(&out),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(
        std::fs::read(reference.join("indicator.csv")).unwrap(),
        std::fs::read(out.join("indicator.csv")).unwrap()
    );
    assert_eq!(json(&out.join("manifest.json"))["seed"], 7);
    let bad = write(dir.path(), "bad.cfg", "window 20\n");
    let o = run(&["indicator", "--returns", s(&returns), "--config", s(&bad)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn copula_grid_sums_to_one() {
    let dir = tempfile::tempdir().unwrap();
    let returns = data("synthetic_returns.csv");
    let o = run(&[
        "copula",
        "--returns",
        s(&returns),
        "--window",
        "60",
        "--end",
        "2000-09-01",
        "--m",
        "100",
        "--n",
        "500000",
        "--seed",
        "3",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = std::fs::read_to_string(dir.path().join("copula.csv")).unwrap();
    let rows: Vec<Vec<f64>> = text
        .lines()
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 100);
    assert!(rows.iter().all(|r| r.len() == 100));
    let total: f64 = rows.iter().flatten().sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
    let side = json(&dir.path().join("copula.json"));
    assert_eq!(side["m"], 100);
    assert_eq!(side["n"], 500000);
    assert_eq!(side["seed"], 3);
    assert_eq!(side["end_date"], "2000-09-01");
    assert_eq!(side["axes"][0]["levels"].as_array().unwrap().len(), 99);
    assert_eq!(side["axes"][1]["kind"], "quadratic");
    let o = run(&[
        "copula",
        "--returns",
        s(&returns),
        "--end",
        "1999-01-01",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 3);
}

#[test]
fn sample_writes_plain_decimal_points() {
    let dir = tempfile::tempdir().unwrap();
    for method in ["exponential", "sorted"] {
        let out = dir.path().join(method);
        let o = run(&[
            "sample",
            "--dim",
            "4",
            "--n",
            "1000",
            "--method",
            method,
            "--seed",
            "11",
            "--out-dir",
            s(&out),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let text = std::fs::read_to_string(out.join("points.csv")).unwrap();
        assert_eq!(text.lines().count(), 1000);
        for line in text.lines() {
            assert!(!line.contains('e'), "{line}");
            let x: Vec<f64> = line.split(',').map(|v| v.parse().unwrap()).collect();
            assert_eq!(x.len(), 4);
            assert!(x.iter().all(|&v| v >= 0.0) && x.iter().sum::<f64>() <= 1.0 + 1e-12);
        }
    }
    let o = run(&[
        "sample",
        "--dim",
        "0",
        "--n",
        "5",
        "--out-dir",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 2);
}
