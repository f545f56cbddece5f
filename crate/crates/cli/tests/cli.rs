use std::process::{Command, Output};

fn suspension(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_suspension")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn sample_is_sorted_and_reproducible() {
    let a = suspension(&["sample", "--lambda", "1", "--window", "0:10", "--seed", "7"]);
    assert_eq!(code(&a), 0);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let pts: Vec<f64> = v["points"].as_array().unwrap().iter().map(|p| p.as_f64().unwrap()).collect();
    assert!(!pts.is_empty());
    assert!(pts.windows(2).all(|w| w[0] < w[1]));
    assert!(pts.iter().all(|&p| p > 0.0 && p <= 10.0));
    let b = suspension(&["sample", "--lambda", "1", "--window", "0:10", "--seed", "7"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn usage_errors_exit_2() {
    let o = suspension(&["sample", "--window", "5:2", "--seed", "7"]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("5:2"));
    assert_eq!(code(&suspension(&["sample", "--window", "0:1"])), 2);
    assert_eq!(code(&suspension(&["experiment", "t1-law"])), 2);
    assert_eq!(code(&suspension(&["experiment", "no-such", "--seed", "1"])), 2);
    assert_eq!(code(&suspension(&["iterate", "--transform", "boole-signed", "--map", "leftmost", "--seed", "7"])), 2);
    assert_eq!(code(&suspension(&["iterate", "--transform", "wat", "--seed", "7"])), 2);
    assert_eq!(code(&suspension(&["frobnicate"])), 2);
}

#[test]
fn iterate_writes_the_trajectory() {
    let o = suspension(&["iterate", "--transform", "boole-unsigned", "--map", "leftmost", "--steps", "100", "--seed", "7"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("step,kappa,t1,window_hi,points_tracked"));
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    assert_eq!(rows.len(), 100);
    for (i, r) in rows.iter().enumerate() {
        assert_eq!(r.len(), 5);
        assert_eq!(r[0].parse::<usize>().unwrap(), i + 1);
        assert!(r[1].parse::<u64>().unwrap() >= 1);
        assert!(r[2].parse::<f64>().unwrap() > 0.0);
    }
}

#[test]
fn translation_returns_every_step() {
    let o = suspension(&["iterate", "--transform", "translation:1", "--map", "leftmost", "--steps", "20", "--seed", "3"]);
    assert_eq!(code(&o), 0);
    let t1: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            assert_eq!(f[1], "1");
            f[2].parse().unwrap()
        })
        .collect();
    assert!(t1.windows(2).all(|w| (w[1] - w[0] - 1.0).abs() < 1e-9));
}

#[test]
fn iterate_from_a_sampled_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.json");
    let p = path.to_str().unwrap();
    assert_eq!(code(&suspension(&["sample", "--window", "0:5", "--seed", "9", "--out", p])), 0);
    let o = suspension(&["iterate", "--transform", "boole-unsigned", "--map", "suspension", "--steps", "10", "--input", p, "--seed", "9"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 11);
}

#[test]
fn resource_limits_exit_3() {
    let o = suspension(&["iterate", "--transform", "boole-unsigned", "--steps", "200", "--kappa-cap", "1", "--seed", "7"]);
    assert_eq!(code(&o), 3);
    assert!(String::from_utf8_lossy(&o.stderr).contains("resource limit"));
    let o = suspension(&["experiment", "kappa-tails", "--n", "300", "--kappa-cap", "1", "--seed", "7", "--format", "json"]);
    assert_eq!(code(&o), 3);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["outcome"], "inconclusive");
}

#[test]
fn experiment_list_names_everything() {
    let o = suspension(&["experiment", "list"]);
    assert_eq!(code(&o), 0);
    let names: Vec<String> = stdout(&o).lines().map(|l| l.split_whitespace().next().unwrap().to_string()).collect();
    assert_eq!(
        names,
        [
            "t1-law",
            "leftmost-invariance",
            "conjugacy",
            "conditional-identity",
            "z2-counterexample",
            "kappa-tails",
            "birkhoff",
            "preimage-sum",
            "lazy-extension"
        ]
    );
}

fn without_clock(path: &std::path::Path) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    v.as_object_mut().unwrap().remove("wall_clock_ms");
    v
}

#[test]
fn experiment_reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |p: &std::path::Path, workers: &str| {
        suspension(&["experiment", "t1-law", "--n", "100000", "--seed", "7", "--workers", workers, "--out", p.to_str().unwrap()])
    };
    assert_eq!(code(&run(&a, "1")), 0);
    assert_eq!(code(&run(&b, "2")), 0);
    let (va, vb) = (without_clock(&a), without_clock(&b));
    assert_eq!(va, vb);
    assert_eq!(va["schema"], "report/1");
    assert_eq!(va["seed"], 7);
    assert!(va["tests"][0]["p_value"].as_f64().unwrap() > 0.01);
}

#[test]
fn statistical_failure_exits_1() {
    // translation is not conservative, so its averages drift to 0 rather than 1 - 1/e
    let o = suspension(&["experiment", "birkhoff", "--transform", "translation:1", "--n", "3", "--steps", "200", "--seed", "7"]);
    assert_eq!(code(&o), 1, "{}", stdout(&o));
}

#[test]
fn suite_replays_a_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let manifest = dir.path().join("m.json");
    std::fs::write(
        &manifest,
        r#"{"experiments": [
            {"name": "z2-counterexample", "seed": 7, "replicas": 2000},
            {"name": "preimage-sum", "seed": 7}
        ]}"#,
    )
    .unwrap();
    let out = dir.path().join("reports");
    let o = suspension(&["suite", "--manifest", manifest.to_str().unwrap(), "--out-dir", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stdout(&o));
    assert!(out.join("00-z2-counterexample.json").exists());
    assert!(out.join("01-preimage-sum.json").exists());
    std::fs::write(&manifest, r#"{"experiments": [{"name": "nope", "seed": 1}]}"#).unwrap();
    assert_eq!(code(&suspension(&["suite", "--manifest", manifest.to_str().unwrap()])), 2);
}

#[test]
fn shipped_manifest_is_valid() {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/../../manifests/acceptance.json");
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    let entries = v["experiments"].as_array().unwrap();
    assert!(!entries.is_empty());
    for e in entries {
        let spec: suspension_core::stats::ExperimentSpec = serde_json::from_value(e.clone()).unwrap();
        spec.validate().unwrap();
    }
}
