use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn swaywatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_swaywatch"))
        .args(args)
        .env_remove("SWAYWATCH_OUT")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = swaywatch(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    swaywatch(args).status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn snapshot(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.insert(path.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&path).unwrap());
            }
        }
    }
    out
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn simulate_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim");
    let args = ["simulate", "treadmill", "--seed", "7", "--trials", "2", "--duration", "40", "-o", s(&out)];
    ok(&args);
    let first = snapshot(&out);
    assert!(first.contains_key(Path::new("trial_001/states.csv")));
    assert!(first.contains_key(Path::new("config.json")));
    ok(&args);
    assert_eq!(first, snapshot(&out));
    ok(&["simulate", "treadmill", "--seed", "8", "--trials", "2", "--duration", "40", "-o", s(&out)]);
    assert_ne!(first, snapshot(&out));
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("x");
    assert_eq!(code(&["simulate", "treadmill", "--duration", "0", "-o", s(&out)]), 2);
    assert_eq!(code(&["simulate", "treadmill", "--bogus", "-o", s(&out)]), 2);
    assert_eq!(code(&["detect", "-o", s(&out)]), 2);
    assert_eq!(code(&["simulate", "walk", "--waypoints", "0,0;1", "-o", s(&out)]), 2);
    assert_eq!(code(&["dataset", "--input", s(&out), "--stride", "0", "-o", s(&out)]), 2);
    assert_eq!(code(&["--help"]), 0);
}

#[test]
fn batch_flag_writes_192_trials() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("batch");
    let stdout = ok(&["--json", "simulate", "treadmill", "--batch", "-o", s(&out)]);
    let v: Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["trials"], 192);
    let trials = std::fs::read_dir(&out)
        .unwrap()
        .filter(|e| e.as_ref().unwrap().path().join("states.csv").is_file())
        .count();
    assert_eq!(trials, 192);
    let config = read_json(&out.join("config.json"));
    assert_eq!(config["resolved"]["batch"]["trials"], 192);
    assert_eq!(config["resolved"]["batch"]["duration"], 30.0);
}

#[test]
fn detect_on_unperturbed_input_finds_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let sim = dir.path().join("sim");
    ok(&["simulate", "treadmill", "--trials", "2", "--controls", "--duration", "45", "-o", s(&sim)]);
    let det = dir.path().join("det");
    ok(&["detect", "--input", s(&sim.join("control_001")), "-o", s(&det)]);
    let report = read_json(&det.join("report.json"));
    for metric in ["sway_area", "torso_angle"] {
        let trials = report[metric]["trials"].as_array().unwrap();
        assert_eq!(trials.len(), 1);
        assert!(trials[0]["events"].as_array().unwrap().is_empty(), "{metric}");
        assert_eq!(report[metric]["detection_rate"], Value::Null);
    }
    let trace = std::fs::read_to_string(det.join("traces/control_001.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(lines.next().unwrap(), "tick,sigma_z,delta_sigma_z,theta_z,delta_theta_z,event_flag");
    assert_eq!(lines.clone().count(), 900);
    assert!(lines.all(|l| l.ends_with(",0")));

    assert_eq!(code(&["detect", "--input", s(&dir.path().join("missing")), "-o", s(&det)]), 4);
}

#[test]
fn detect_batch_prints_the_reported_rate() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det");
    let stdout = ok(&["detect", "--batch", "--no-traces", "-o", s(&det)]);
    let report = read_json(&det.join("report.json"));
    let line = stdout.lines().find(|l| l.starts_with("sway_area:")).unwrap();
    let printed: f64 = line
        .split_whitespace()
        .find_map(|w| w.strip_prefix("detection_rate="))
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(printed, report["sway_area"]["detection_rate"].as_f64().unwrap());
    assert_eq!(report["sway_area"]["n_true_events"], 192);
    assert_eq!(report["controls"]["trials"], 192);
    assert_eq!(report["controls"]["sway_false_positives"], 0);
    assert_eq!(report["by_magnitude"].as_array().unwrap().len(), 2);
}

#[test]
fn threshold_flag_reaches_the_detector() {
    let dir = tempfile::tempdir().unwrap();
    let det = dir.path().join("det");
    let args = ["--json", "detect", "--batch", "--trials", "8", "--no-traces", "--threshold-mult", "1000", "-o", s(&det)];
    let v: Value = serde_json::from_str(&ok(&args)).unwrap();
    assert_eq!(v["sway_area"]["n_detected"], 0);
    let config = read_json(&det.join("config.json"));
    assert_eq!(config["resolved"]["detector"]["threshold_mult"], 1000.0);
    assert_eq!(config["resolved"]["sway"]["window_len"], 50);
}

fn walk(out: &Path, id: &str, waypoints: &str, scene: &str) {
    ok(&["simulate", "walk", "--waypoints", waypoints, "--scene", scene, "--id", id, "-o", s(out)]);
}

#[test]
fn dataset_curvature_filter_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let walks = dir.path().join("walks");
    walk(&walks, "straight", "0,0;16,0", "outdoor-free");
    let set = dir.path().join("set");
    let count = |args: &[&str]| -> u64 {
        let v: Value = serde_json::from_str(&ok(args)).unwrap();
        v["windows"].as_u64().unwrap()
    };
    let base = ["--json", "dataset", "--input", s(&walks), "--no-panoramas", "-o", s(&set)];
    assert_eq!(count(&base), 0);
    let mut unfiltered = base.to_vec();
    unfiltered.push("--no-curvature-filter");
    assert!(count(&unfiltered) > 0);
    let first = snapshot(&set);
    count(&unfiltered);
    assert_eq!(first, snapshot(&set));
    let manifest = read_json(&set.join("manifest.json"));
    assert_eq!(manifest["input_ticks"], 150);
    assert_eq!(manifest["label_ticks"], 50);
}

#[test]
fn split_file_selects_trials() {
    let dir = tempfile::tempdir().unwrap();
    let walks = dir.path().join("walks");
    walk(&walks, "a", "0,0;16,0", "indoor");
    walk(&walks, "b", "0,0;0,16", "indoor");
    let split = dir.path().join("split.json");
    std::fs::write(&split, r#"{"train":["a"],"test":["b"]}"#).unwrap();
    let set = dir.path().join("set");
    ok(&[
        "dataset", "--input", s(&walks), "--no-panoramas", "--no-curvature-filter", "--split", s(&split), "--subset",
        "test", "-o", s(&set),
    ]);
    let manifest = read_json(&set.join("manifest.json"));
    let windows = manifest["windows"].as_array().unwrap();
    assert!(!windows.is_empty());
    assert!(windows.iter().all(|w| w["source_id"] == "b"));
}

#[test]
fn eval_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let walks = dir.path().join("walks");
    walk(&walks, "loop", "0,0;4,0;4,4;0,4", "outdoor-cluttered");
    let set = dir.path().join("set");
    ok(&[
        "dataset", "--input", s(&walks), "--input-ticks", "20", "--label-ticks", "10", "--stride", "40",
        "--queue-capacity", "10", "-o", s(&set),
    ]);
    let manifest = read_json(&set.join("manifest.json"));
    assert_eq!(manifest["ticks_per_window"], 30);
    assert!(manifest["has_panoramas"].as_bool().unwrap());

    let pa = dir.path().join("pred_a");
    let pb = dir.path().join("pred_b");
    ok(&["identity", "--input", s(&set), "--variant", "vision", "-o", s(&pa)]);
    ok(&["identity", "--input", s(&set), "--variant", "no_vision", "-o", s(&pb)]);
    let report = dir.path().join("report");
    ok(&["eval", "--truth", s(&set), "--pred", s(&pa), "--pred", s(&pb), "-o", s(&report)]);
    let csv = std::fs::read_to_string(report.join("horizon.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "scenario,variant,metric,horizon_s,mean,std,n,cumulative_mean");
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 2 * 4 * 10);
    for r in &rows {
        assert_eq!((r[4].parse::<f64>().unwrap(), r[5].parse::<f64>().unwrap()), (0.0, 0.0));
    }
    for variant in ["vision", "no_vision"] {
        assert!(rows.iter().any(|r| r[1] == variant));
    }
    let group_files = std::fs::read_dir(&report)
        .unwrap()
        .filter(|e| {
            let name = e.as_ref().unwrap().file_name().into_string().unwrap();
            name.ends_with(".csv") && name != "horizon.csv"
        })
        .count();
    assert_eq!(group_files, 8);

    let other = dir.path().join("other");
    ok(&[
        "dataset", "--input", s(&walks), "--input-ticks", "20", "--label-ticks", "10", "--stride", "25",
        "--no-panoramas", "-o", s(&other),
    ]);
    let po = dir.path().join("pred_other");
    ok(&["identity", "--input", s(&other), "-o", s(&po)]);
    assert_eq!(code(&["eval", "--truth", s(&set), "--pred", s(&po), "-o", s(&report)]), 3);
    assert_eq!(code(&["identity", "--input", s(&pa), "-o", s(&po)]), 3);
}

#[test]
fn output_directory_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("env_out");
    let status = Command::new(env!("CARGO_BIN_EXE_swaywatch"))
        .args(["simulate", "treadmill", "--duration", "20"])
        .env("SWAYWATCH_OUT", &out)
        .stdout(std::process::Stdio::null())
        .status()
        .unwrap();
    assert!(status.success());
    assert!(out.join("trial_000/truth.json").is_file());
    let config = read_json(&out.join("config.json"));
    assert_eq!(config["constants"]["panorama_rows"], 180);
    assert_eq!(config["resolved"]["walk"]["duration"], 20.0);
}
