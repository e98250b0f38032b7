use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ktrp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ktrp")).args(args).output().unwrap()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

const SMALL_KTSP: &str =
    r#"{"name": "small", "kind": "ktsp-rate", "n": [40, 80, 160], "k": [3], "trials": 30, "seed": 9}"#;

#[test]
fn experiment_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let out = out.to_str().unwrap();

    let loose = SMALL_KTSP.replace(
        "\"seed\": 9",
        "\"seed\": 9, \"thresholds\": {\"slope_tolerance\": 10.0, \"naive_factor\": 100.0}",
    );
    let r = ktrp(&[
        "experiment",
        "--config",
        &write(dir.path(), "loose.json", &loose),
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS"));
    assert!(Path::new(out).join("small.csv").exists());
    assert!(Path::new(out).join("small.json").exists());

    let strict = SMALL_KTSP.replace(
        "\"seed\": 9",
        "\"seed\": 9, \"thresholds\": {\"slope_tolerance\": 0.0, \"naive_factor\": 0.0}",
    );
    let r = ktrp(&[
        "experiment",
        "--config",
        &write(dir.path(), "strict.json", &strict),
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&r.stdout).contains("FAIL"));

    let bad = SMALL_KTSP.replace("\"k\": [3]", "\"k\": [1000]");
    let r = ktrp(&[
        "experiment",
        "--config",
        &write(dir.path(), "bad.json", &bad),
        "--out",
        out,
    ]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).contains("exceeds"));
}

#[test]
fn usage_errors_exit_one() {
    assert_eq!(ktrp(&["tsp"]).status.code(), Some(1));
    assert_eq!(ktrp(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(ktrp(&["dispatch"]).status.code(), Some(1));
    assert_eq!(ktrp(&["--help"]).status.code(), Some(0));
}

#[test]
fn seed_override_changes_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "c.json",
        &SMALL_KTSP.replace("\"trials\": 30", "\"trials\": 3"),
    );
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    ktrp(&["experiment", "--config", &cfg, "--out", a.to_str().unwrap()]);
    ktrp(&[
        "experiment",
        "--config",
        &cfg,
        "--out",
        b.to_str().unwrap(),
        "--seed",
        "10",
    ]);
    let a = std::fs::read_to_string(a.join("small.csv")).unwrap();
    let b = std::fs::read_to_string(b.join("small.csv")).unwrap();
    assert_eq!(a.lines().next(), Some("experiment,n,k,trial,seed,value"));
    assert_ne!(a, b);
}

#[test]
fn sample_then_route() {
    let dir = tempfile::tempdir().unwrap();
    let r = ktrp(&["sample", "--n", "9", "--seed", "4", "--format", "csv"]);
    assert_eq!(r.status.code(), Some(0));
    let pts = write(dir.path(), "p.csv", std::str::from_utf8(&r.stdout).unwrap());

    let strip = json(&ktrp(&["tsp", "--points", &pts, "--method", "strip"]))["length"]
        .as_f64()
        .unwrap();
    let exact = json(&ktrp(&["tsp", "--points", &pts, "--method", "exact"]))["length"]
        .as_f64()
        .unwrap();
    assert!(exact <= strip + 1e-12);

    let k = json(&ktrp(&["ktsp", "--points", &pts, "--k", "4", "--exact"]));
    assert_eq!(k["order"].as_array().unwrap().len(), 4);

    let t = ktrp(&["trp", "--points", &pts, "--format", "csv"]);
    assert_eq!(String::from_utf8_lossy(&t.stdout).lines().count(), 10);
}

#[test]
fn fairness_and_dispatch_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "f.json",
        r#"{"m": 2, "layers": [[2, 0, 0, 0], [0, 2, 0, 0]], "k": 3, "p": [0.5, 0.5]}"#,
    );
    let v = json(&ktrp(&["fairness", "--config", &cfg]));
    assert_eq!(v["mix"]["q"], serde_json::json!([0.5, 0.5, 0.0, 0.0]));
    assert!(v["deterministic_ratio"].is_null());

    let cfg = write(
        dir.path(),
        "d.json",
        r#"{"lambda": 1, "a": 1, "T": 6, "T_cutoff": 6, "m": 3}"#,
    );
    let v = json(&ktrp(&["dispatch", "--config", &cfg]));
    let t: Vec<f64> = v["tsp"]["dispatch_times"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .collect();
    assert!((t[0] - 4.0).abs() < 1e-9 && (t[1] - 5.0).abs() < 1e-9 && (t[2] - 5.381966).abs() < 1e-6);

    let infeasible = write(
        dir.path(),
        "i.json",
        r#"{"m": 2, "layers": [[2, 0, 0, 0], [0, 2, 0, 0]], "k": 3, "p": [1.5, -0.5]}"#,
    );
    assert_eq!(ktrp(&["fairness", "--config", &infeasible]).status.code(), Some(1));
}
