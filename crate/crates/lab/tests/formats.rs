use ktrp_core::density::sample_points;
use ktrp_core::{GridDensity, Point, RandomSeed, Square};
use ktrp_lab::experiment::{run_experiment, run_trials, trial_stream, ExperimentConfig, ExperimentKind};
use ktrp_lab::fit_loglog_slope;
use ktrp_lab::formats::{read_json, read_points_csv, write_json, write_points_csv, DensityJson, PointsJson};

fn square() -> Square {
    Square::new(Point::new(-2.0, 3.0), 5.0).unwrap()
}

#[test]
fn points_csv_round_trip_is_exact() {
    let d = GridDensity::new(2, vec![1.0, 0.5, 2.0, 0.5], square()).unwrap();
    let ps = sample_points(&d, 200, RandomSeed::new(3, 1));
    let mut buf = Vec::new();
    write_points_csv(&ps, &mut buf).unwrap();
    let back = read_points_csv(&buf[..], Some(square())).unwrap();
    assert_eq!(back.points(), ps.points());
}

#[test]
fn points_json_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let d = GridDensity::uniform(3, square());
    let ps = sample_points(&d, 50, RandomSeed::new(3, 2));
    let path = dir.path().join("p.json");
    write_json(&PointsJson::from(&ps), std::fs::File::create(&path).unwrap()).unwrap();
    let back = read_json::<PointsJson>(&path).unwrap().to_point_set().unwrap();
    assert_eq!(back.points(), ps.points());
    assert_eq!(back.square(), ps.square());
}

#[test]
fn density_json_from_layers() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.json");
    std::fs::write(&path, r#"{"m": 2, "layers": [[1, 1, 0, 0], [0, 1, 1, 0]]}"#).unwrap();
    let dj: DensityJson = read_json(&path).unwrap();
    assert_eq!(dj.to_density().unwrap().cells(), &[1.0, 2.0, 1.0, 0.0]);
    assert_eq!(dj.to_population().unwrap().populations(), 2);
}

#[test]
fn points_outside_square_are_rejected() {
    assert!(read_points_csv("x,y\n0.5,1.5\n".as_bytes(), None).is_err());
    assert!(read_points_csv("x,y\n0.5,nope\n".as_bytes(), None).is_err());
}

#[test]
fn unknown_config_fields_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    std::fs::write(
        &path,
        r#"{"name": "x", "kind": "trp-rate", "n": [10], "trials": 1, "seed": 0, "nn": 3}"#,
    )
    .unwrap();
    assert!(ExperimentConfig::load(&path).is_err());
}

fn small(kind: ExperimentKind) -> ExperimentConfig {
    let text = match kind {
        ExperimentKind::TrpRate => r#"{"name": "t", "kind": "trp-rate", "n": [20, 40], "trials": 6, "seed": 1}"#,
        _ => r#"{"name": "k", "kind": "ktsp-rate", "n": [20, 40], "k": [2, 3], "trials": 6, "seed": 1}"#,
    };
    serde_json::from_str(text).unwrap()
}

#[test]
fn config_hash_ignores_execution_settings() {
    let a = small(ExperimentKind::KtspRate);
    let mut b = a.clone();
    b.workers = Some(4);
    b.out = Some("elsewhere".into());
    assert_eq!(a.hash(), b.hash());
    b.seed = 2;
    assert_ne!(a.hash(), b.hash());
}

#[test]
fn trial_streams_are_distinct_and_stable() {
    let s = trial_stream("k", 20, Some(2), 0);
    assert_eq!(s, trial_stream("k", 20, Some(2), 0));
    assert_ne!(s, trial_stream("k", 20, Some(2), 1));
    assert_ne!(s, trial_stream("k", 20, Some(3), 0));
    assert_ne!(s, trial_stream("k", 20, None, 0));
    assert_ne!(s, trial_stream("j", 20, Some(2), 0));
}

#[test]
fn rows_do_not_depend_on_workers() {
    for kind in [ExperimentKind::KtspRate, ExperimentKind::TrpRate] {
        let cfg = small(kind);
        let one = run_trials(&cfg, 1).unwrap();
        assert_eq!(one, run_trials(&cfg, 3).unwrap());
        assert!(
            one.windows(2)
                .all(|w| w[0].experiment != w[1].experiment
                    || (w[0].n, w[0].k, w[0].trial) < (w[1].n, w[1].k, w[1].trial))
        );
    }
}

#[test]
fn summary_file_carries_hash_and_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(ExperimentKind::TrpRate);
    let s = run_experiment(&cfg, 1, dir.path()).unwrap();
    let v: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("t.json")).unwrap()).unwrap();
    assert_eq!(v["config_hash"], cfg.hash());
    assert_eq!(v["master_seed"], 1);
    assert_eq!(s.config_hash, cfg.hash());
}

#[test]
fn fit_recovers_exact_power_law() {
    let pts: Vec<(f64, f64)> = [100.0, 200.0, 400.0, 800.0]
        .iter()
        .map(|&n: &f64| (n, 3.0 * n.powf(-0.75)))
        .collect();
    let f = fit_loglog_slope(&pts).unwrap();
    assert!((f.slope + 0.75).abs() < 1e-12);
    assert!((f.r_squared - 1.0).abs() < 1e-12);
}

#[test]
fn ktsp_slope_for_three_points() {
    let cfg: ExperimentConfig = serde_json::from_str(
        r#"{"name": "k3", "kind": "ktsp-rate", "n": [100, 200, 400, 800, 1600], "k": [3], "trials": 200, "seed": 11}"#,
    )
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let s = run_experiment(&cfg, 1, dir.path()).unwrap();
    let slope = s.series.iter().find_map(|x| x.fit.as_ref()).unwrap().slope;
    assert!((slope + 0.75).abs() <= 0.1, "slope {slope}");
}
