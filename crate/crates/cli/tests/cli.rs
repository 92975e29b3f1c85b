use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const SCALAR_HUBER: &str = r#"{
  "n": 1, "m": 1, "N": 40,
  "G": [[0.9]], "H": [[1]], "Q": [[0.5]], "R": [[1]], "x0": [0],
  "process_penalty": {"kind": "l2"},
  "measurement_penalty": {"kind": "huber", "kappa": 1.0}
}"#;

const TRACKING_L2: &str = r#"{
  "n": 2, "m": 1, "N": 60,
  "G": [[1, 0.1], [0, 1]], "H": [[1, 0]],
  "Q": [[0.01, 0], [0, 0.01]], "R": [[0.25]], "x0": [0, 1],
  "process_penalty": {"kind": "l2"},
  "measurement_penalty": {"kind": "l2"}
}"#;

fn plqs(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plqs")).args(args).output().expect("run plqs")
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let path = dir.path().join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn read_csv(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.trim().parse().unwrap()).collect())
        .collect()
}

fn simulate(dir: &TempDir, config: &Path, seed: &str, prefix: &str, extra: &[&str]) -> PathBuf {
    let out = dir.path().join(prefix);
    let mut args = vec!["simulate", "--config", s(config), "--seed", seed, "--output", s(&out)];
    args.extend_from_slice(extra);
    let res = plqs(&args);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    out
}

fn suffixed(prefix: &Path, suffix: &str) -> PathBuf {
    PathBuf::from(format!("{}{suffix}", prefix.display()))
}

fn round12(v: f64) -> String {
    format!("{v:.11e}")
}

#[test]
fn quadratic_fit_matches_rts_oracle() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "model.json", TRACKING_L2);
    let prefix = simulate(&dir, &config, "3", "sim", &[]);
    let z = suffixed(&prefix, "_z.csv");
    let ip = dir.path().join("ip.csv");
    let rts = dir.path().join("rts.csv");
    for (out, oracle) in [(&ip, "none"), (&rts, "rts")] {
        let res =
            plqs(&["fit", "--config", s(&config), "--measurements", s(&z), "--output", s(out), "--oracle", oracle]);
        assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    }
    let (a, b) = (read_csv(&ip), read_csv(&rts));
    assert_eq!(a.len(), 60);
    for (ra, rb) in a.iter().zip(&b) {
        for (x, y) in ra.iter().zip(rb) {
            assert!(round12(*x) == round12(*y) || (x - y).abs() < 1e-12, "{x} vs {y}");
        }
    }
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("ip.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], true);
    assert_eq!(report["oracle"], "none");
    assert!(report["phases"]["solve_ms"].as_f64().unwrap() >= 0.0);
}

#[test]
fn malformed_measurement_row_is_reported() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "model.json", &SCALAR_HUBER.replace("\"N\": 40", "\"N\": 3"));
    let z = write(&dir, "z.csv", "z1\n0.5\n1.0,oops\n2.0\n");
    let res = plqs(&["fit", "--config", s(&config), "--measurements", s(&z), "--output", s(&dir.path().join("x.csv"))]);
    assert_eq!(res.status.code(), Some(1));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("row 3"), "{err}");
}

#[test]
fn rts_oracle_rejects_robust_penalties() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "model.json", SCALAR_HUBER);
    let prefix = simulate(&dir, &config, "1", "sim", &[]);
    let z = suffixed(&prefix, "_z.csv");
    let res = plqs(&[
        "fit",
        "--config",
        s(&config),
        "--measurements",
        s(&z),
        "--output",
        s(&dir.path().join("x.csv")),
        "--oracle",
        "rts",
    ]);
    assert_eq!(res.status.code(), Some(1));
}

#[test]
fn iteration_limit_exits_two_and_still_writes() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "model.json", SCALAR_HUBER);
    let prefix = simulate(&dir, &config, "2", "sim", &["--v-outlier-prob", "0.2", "--v-outlier-scale", "10"]);
    let z = suffixed(&prefix, "_z.csv");
    let out = dir.path().join("x.csv");
    let res = plqs(&["fit", "--config", s(&config), "--measurements", s(&z), "--output", s(&out), "--max-iter", "1"]);
    assert_eq!(res.status.code(), Some(2));
    assert_eq!(read_csv(&out).len(), 40);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("x.csv.report.json")).unwrap()).unwrap();
    assert_eq!(report["converged"], false);
    assert_eq!(report["iterations"], 1);
}

#[test]
fn simulate_is_reproducible_and_records_metadata() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "model.json", SCALAR_HUBER);
    let flags = ["--v-noise", "laplace", "--v-outlier-prob", "0.1", "--v-outlier-scale", "10"];
    let a = simulate(&dir, &config, "42", "a", &flags);
    let b = simulate(&dir, &config, "42", "b", &flags);
    let c = simulate(&dir, &config, "43", "c", &flags);
    let read = |p: &Path, suffix: &str| std::fs::read_to_string(suffixed(p, suffix)).unwrap();
    assert_eq!(read(&a, "_z.csv"), read(&b, "_z.csv"));
    assert_eq!(read(&a, "_x.csv"), read(&b, "_x.csv"));
    assert_ne!(read(&a, "_z.csv"), read(&c, "_z.csv"));

    let meta: serde_json::Value = serde_json::from_str(&read(&a, "_meta.json")).unwrap();
    assert_eq!(meta["seed"], 42);
    assert_eq!(meta["horizon"], 40);
    assert_eq!(meta["measurement_noise"]["outlier_prob"], 0.1);
    assert_eq!(meta["measurement_noise"]["outlier_scale"], 10.0);
    assert_eq!(meta["process_noise"]["outlier_prob"], 0.0);
    assert!(meta["rng"].as_str().unwrap().to_lowercase().contains("chacha"));
}

#[test]
fn simulate_then_fit_round_trip() {
    let dir = TempDir::new().unwrap();
    let config = write(&dir, "model.json", SCALAR_HUBER);
    let prefix = simulate(&dir, &config, "7", "sim", &[]);
    let out = dir.path().join("x.csv");
    let res =
        plqs(&["fit", "--config", s(&config), "--measurements", s(&suffixed(&prefix, "_z.csv")), "--output", s(&out)]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let fitted = read_csv(&out);
    let truth = read_csv(&suffixed(&prefix, "_x.csv"));
    let err: f64 = fitted.iter().zip(&truth).map(|(a, b)| (a[0] - b[0]).powi(2)).sum::<f64>() / 40.0;
    let raw: f64 =
        read_csv(&suffixed(&prefix, "_z.csv")).iter().zip(&truth).map(|(z, x)| (z[0] - x[0]).powi(2)).sum::<f64>()
            / 40.0;
    assert!(err < raw, "smoothed mse {err} vs raw {raw}");
}

#[test]
fn check_accepts_every_atom() {
    let dir = TempDir::new().unwrap();
    for spec in [
        r#"{"kind": "l2"}"#,
        r#"{"kind": "l1"}"#,
        r#"{"kind": "huber", "kappa": 2}"#,
        r#"{"kind": "vapnik", "epsilon": 0.5}"#,
    ] {
        let text = SCALAR_HUBER.replace(r#"{"kind": "huber", "kappa": 1.0}"#, spec);
        let config = write(&dir, "model.json", &text);
        let res = plqs(&["check", "--config", s(&config)]);
        assert_eq!(res.status.code(), Some(0), "{spec}: {}", String::from_utf8_lossy(&res.stdout));
    }
}

#[test]
fn check_rejects_hinge_with_witness() {
    let dir = TempDir::new().unwrap();
    let hinge = r#"{"kind": "plq", "A": [[1, -1]], "a": [1, 0], "M": [[0]], "b": [0], "B": [[1]]}"#;
    let config = write(&dir, "model.json", &SCALAR_HUBER.replace(r#"{"kind": "huber", "kappa": 1.0}"#, hinge));
    let res = plqs(&["check", "--config", s(&config)]);
    assert_eq!(res.status.code(), Some(3));
    let text = String::from_utf8_lossy(&res.stdout);
    assert!(text.contains("coercive: NO, witness"), "{text}");
}

#[test]
fn check_rejects_unbounded_quadratic() {
    let dir = TempDir::new().unwrap();
    let flat = r#"{"kind": "plq", "M": [[0]], "b": [0], "B": [[1]]}"#;
    let config = write(&dir, "model.json", &SCALAR_HUBER.replace(r#"{"kind": "huber", "kappa": 1.0}"#, flat));
    let res = plqs(&["check", "--config", s(&config)]);
    assert_eq!(res.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&res.stdout).contains("finite: NO"));
}

#[test]
fn bench_prints_one_row_per_horizon() {
    let run = || {
        let res = plqs(&["bench", "--sizes", "50", "--repeats", "1", "--seed", "4"]);
        assert_eq!(res.status.code(), Some(0));
        String::from_utf8(res.stdout).unwrap()
    };
    let (a, b) = (run(), run());
    let lines: Vec<&str> = a.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "N,iterations,wall_ms,ms_per_iteration,converged");
    let fields: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(fields[0], "50");
    assert_eq!(fields[4], "true");
    let iterations = |text: &str| text.lines().nth(1).unwrap().split(',').nth(1).unwrap().to_string();
    assert_eq!(iterations(&a), iterations(&b));
}

#[test]
fn missing_config_is_an_input_error() {
    let res = plqs(&["check"]);
    assert_eq!(res.status.code(), Some(1));
    let res = plqs(&["check", "--config", "/nonexistent/model.json"]);
    assert_eq!(res.status.code(), Some(1));
}
