use std::sync::Arc;

use nalgebra::{Rotation2, Vector2, Vector3};
use proptest::prelude::*;
use swaywatch::dataset::exchange::{ExchangeWriter, SetKind, MANIFEST_FILE, PANOS_FILE, STATES_FILE};
use swaywatch::dataset::files::{read_states_csv, read_trial, write_states_csv, write_trial};
use swaywatch::dataset::*;
use swaywatch::eval::score_predictions;
use swaywatch::panorama::{DepthPanorama, CELLS};
use swaywatch::simgait::{schedule_perturbations, simulate_treadmill_trial, simulate_walk_scene, SceneKind, WalkConfig};
use swaywatch::{Error, Pose, StateVector, Timestamp, UnitQuaternion};

fn walking_states(n: usize) -> Vec<StateVector> {
    (0..n)
        .map(|i| {
            let t = i as f64 * 0.05;
            StateVector {
                timestamp: Timestamp::from_tick(i),
                position: Vector3::new(1.25 * t, 0.1 * (0.3 * t).sin(), 1.3),
                orientation: UnitQuaternion::from_rotation_vector(Vector3::new(0.02 * (6.0 * t).sin(), 0.01, 0.05 * t)),
                linear_velocity: Vector3::new(1.25, 0.03 * (0.3 * t).cos(), 0.0),
                angular_velocity: Vector3::new(0.1, -0.2, 0.05),
                sway_area: 0.004 + 0.001 * (t * 0.7).sin().abs(),
                step_frequency: 1.9,
                joint_angles: std::array::from_fn(|j| 0.1 * (t + j as f64).sin()),
            }
        })
        .collect()
}

fn circle_path(radius: f64, n: usize) -> Vec<Vector2<f64>> {
    let omega = 1.25 / radius;
    (0..n)
        .map(|i| {
            let a = omega * i as f64 * 0.05;
            Vector2::new(radius * a.cos(), radius * a.sin())
        })
        .collect()
}

/// Radius a 21-tap moving average and central differences report for a
/// circle sampled every `phi` radians.
fn smoothed_circle_radius(radius: f64, phi: f64) -> f64 {
    let n = 21.0;
    let shrink = (n * phi / 2.0).sin() / (n * (phi / 2.0).sin());
    radius * shrink * (phi / 2.0).cos().powi(2)
}

#[test]
fn window_split_is_tick_exact() {
    let traj = Trajectory::without_scene("w", SceneKind::Indoor, walking_states(260)).unwrap();
    let windows = window_sequences(&traj, 20).unwrap();
    assert_eq!(windows.len(), 4);
    for (i, w) in windows.iter().enumerate() {
        assert_eq!(w.start_tick, 20 * i);
        assert_eq!((w.input_states.len(), w.label_states.len()), (150, 50));
        assert_eq!((w.input_panoramas.len(), w.label_panoramas.len()), (150, 50));
        let gap = w.label_states[0].timestamp.secs() - w.input_states[149].timestamp.secs();
        assert!((gap - 0.05).abs() < 1e-12);
        assert_eq!(w.input_states[0], traj.states[20 * i]);
        assert_eq!(w.label_states[49], traj.states[20 * i + 199]);
    }
    let short = Trajectory::without_scene("s", SceneKind::Indoor, walking_states(199)).unwrap();
    assert!(window_sequences(&short, 20).unwrap().is_empty());
    assert!(window_sequences(&traj, 0).is_err());
}

#[test]
fn curvature_examples() {
    let straight: Vec<_> = (0..200).map(|i| Vector2::new(0.0625 * i as f64, 0.0)).collect();
    assert_eq!(min_turning_radius(&straight).unwrap(), f64::INFINITY);
    for (r, tol) in [(1.5, 0.1), (5.0, 0.3)] {
        let got = min_turning_radius(&circle_path(r, 200)).unwrap();
        assert!((got - r).abs() <= tol, "{r}: {got}");
        let oracle = smoothed_circle_radius(r, 1.25 * 0.05 / r);
        assert!((got - oracle).abs() < 1e-6 * r, "{got} vs {oracle}");
    }
    assert!(matches!(
        min_turning_radius(&straight[..22]),
        Err(Error::InsufficientData { .. })
    ));
}

#[test]
fn state_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("states.csv");
    let states = walking_states(30);
    write_states_csv(&path, &states).unwrap();
    let back = read_states_csv(&path).unwrap();
    assert_eq!(back.len(), 30);
    for (a, b) in states.iter().zip(&back) {
        for (x, y) in a.to_array().iter().zip(b.to_array()) {
            assert!((x - y).abs() < 1e-12);
        }
        assert_eq!(a.timestamp, b.timestamp);
    }
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("t,pos_x,pos_y,pos_z,quat_w"));
}

#[test]
fn trial_directory_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = WalkConfig {
        duration: 4.0,
        scene: SceneKind::Indoor,
        ..WalkConfig::default()
    };
    let trial = simulate_walk_scene(&cfg, &[Vector2::zeros(), Vector2::new(4.0, 0.5)]).unwrap();
    write_trial(dir.path(), &trial).unwrap();
    let back = read_trial(dir.path()).unwrap();
    assert_eq!(back.states.len(), trial.states.len());
    assert_eq!(back.scene_label, SceneKind::Indoor);
    for (a, b) in trial.clouds.iter().zip(&back.clouds) {
        assert_eq!(a.points.len(), b.points.len());
        for (p, q) in a.points.iter().zip(&b.points) {
            assert!((p - q).norm() < 1e-5);
        }
    }
    let tread = WalkConfig {
        duration: 60.0,
        ..WalkConfig::default()
    };
    let t2 = simulate_treadmill_trial(&tread, &schedule_perturbations(60.0, 3)).unwrap();
    let d2 = dir.path().join("t2");
    write_trial(&d2, &t2).unwrap();
    assert_eq!(read_trial(&d2).unwrap().truth, t2.truth);
}

#[test]
fn trajectory_from_trial_builds_panoramas() {
    let cfg = WalkConfig {
        duration: 3.0,
        scene: SceneKind::OutdoorCluttered,
        seed: 5,
        ..WalkConfig::default()
    };
    let trial = simulate_walk_scene(&cfg, &[Vector2::zeros(), Vector2::new(8.0, 0.0)]).unwrap();
    let small = trajectory_from_trial("a", &trial, 1).unwrap();
    let full = trajectory_from_trial("a", &trial, 40).unwrap();
    assert_eq!(full.panoramas.len(), trial.states.len());
    let last = full.len() - 1;
    assert!(full.panoramas[last].coverage() >= small.panoramas[last].coverage());
    assert!(full.panoramas[last].coverage() > 0.0);
    assert!(trajectory_from_trial("a", &trial, 0).is_err());
}

fn textured_panorama(seed: usize) -> Arc<DepthPanorama> {
    let grid = (0..CELLS).map(|i| 0.5 + ((i * 7 + seed * 13) % 950) as f32 / 100.0).collect();
    Arc::new(DepthPanorama::from_grid(grid, Pose::identity()).unwrap())
}

#[test]
fn exchange_round_trip_is_exact_at_f32() {
    let dir = tempfile::tempdir().unwrap();
    let states = walking_states(220);
    let panoramas = (0..220).map(|i| textured_panorama(i % 5)).collect();
    let traj = Trajectory::new("walk_1", SceneKind::OutdoorFree, states, panoramas).unwrap();
    let windows = window_sequences(&traj, 20).unwrap();
    assert_eq!(windows.len(), 2);
    let set_dir = dir.path().join("set");
    export_training_set(&windows, &set_dir, true).unwrap();
    let set = import_training_set(&set_dir).unwrap();
    assert_eq!(set.n_windows(), 2);
    for (i, w) in windows.iter().enumerate() {
        let expected: Vec<[f32; 24]> = w.states().map(|s| s.to_array().map(|v| v as f32)).collect();
        assert_eq!(set.window_states(i), expected.as_slice());
        let panos = set.window_panoramas(i).unwrap().unwrap();
        for (a, b) in panos.iter().zip(w.panoramas()) {
            assert_eq!(a, &b.grid);
        }
        assert_eq!(set.meta(i).start_tick, w.start_tick);
        let back = set.state_vectors(i).unwrap();
        assert!((back[150].timestamp.secs() - w.label_states[0].timestamp.secs()).abs() < 1e-9);
    }

    let pred_dir = dir.path().join("pred");
    set.write_label_predictions(&pred_dir, "identity").unwrap();
    let pred = import_predictions(&pred_dir).unwrap();
    let cases = score_predictions(&set, &pred).unwrap();
    assert_eq!(cases.len(), 2 * 4);
    for c in &cases {
        assert!(c.losses.iter().all(|&l| l == 0.0), "{:?}", c.metric);
    }
    assert!(import_predictions(&set_dir).is_err());
    assert!(import_training_set(&pred_dir).is_err());
}

#[test]
fn exported_predictions_match_label_states() {
    let dir = tempfile::tempdir().unwrap();
    let traj = Trajectory::without_scene("x", SceneKind::Indoor, walking_states(200)).unwrap();
    let windows = window_sequences(&traj, 20).unwrap();
    let set_dir = dir.path().join("set");
    let manifest = export_training_set(&windows, &set_dir, false).unwrap();
    let labels: Vec<Vec<StateVector>> = windows.iter().map(|w| w.label_states.clone()).collect();
    export_predictions(&dir.path().join("p"), "copy", &manifest.windows, &labels, None).unwrap();
    let set = import_training_set(&set_dir).unwrap();
    let pred = import_predictions(&dir.path().join("p")).unwrap();
    assert_eq!(pred.manifest.variant.as_deref(), Some("copy"));
    assert_eq!(pred.label_states(0), set.label_states(0));
    assert!(!set_dir.join(PANOS_FILE).exists());
}

fn export_small(dir: &std::path::Path) {
    let traj = Trajectory::without_scene("x", SceneKind::Indoor, walking_states(240)).unwrap();
    export_training_set(&window_sequences(&traj, 20).unwrap(), dir, false).unwrap();
}

#[test]
fn truncated_states_are_a_shape_error() {
    let dir = tempfile::tempdir().unwrap();
    export_small(dir.path());
    let path = dir.path().join(STATES_FILE);
    let bytes = std::fs::read(&path).unwrap();
    std::fs::write(&path, &bytes[..bytes.len() - 96]).unwrap();
    assert!(matches!(import_training_set(dir.path()), Err(Error::Shape(_))));
}

#[test]
fn nan_payload_names_window_and_tick() {
    let dir = tempfile::tempdir().unwrap();
    export_small(dir.path());
    let path = dir.path().join(STATES_FILE);
    let mut bytes = std::fs::read(&path).unwrap();
    let at = ((200 + 37) * 24 + 5) * 4;
    bytes[at..at + 4].copy_from_slice(&f32::NAN.to_le_bytes());
    std::fs::write(&path, &bytes).unwrap();
    match import_training_set(dir.path()) {
        Err(Error::NanPayload { window, tick }) => assert_eq!((window, tick), (1, 37)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn nan_panorama_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    let mut w = ExchangeWriter::create(dir.path(), SetKind::Predictions, Some("v".into()), true).unwrap();
    let rows = vec![[0.5f32; 24]; 50];
    let mut grids = vec![vec![10.0f32; CELLS]; 50];
    grids[12][999] = f32::NAN;
    let meta = WindowMeta {
        source_id: "a".into(),
        scenario: SceneKind::Indoor,
        start_tick: 0,
        start_time: 0.0,
    };
    w.push(meta, &rows, Some(grids.iter().map(|g| g.as_slice()))).unwrap();
    w.finish().unwrap();
    match import_predictions(dir.path()) {
        Err(Error::NanPayload { window, tick }) => assert_eq!((window, tick), (0, 12)),
        other => panic!("{other:?}"),
    }
}

#[test]
fn schema_errors() {
    let dir = tempfile::tempdir().unwrap();
    export_small(dir.path());
    let path = dir.path().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    std::fs::write(&path, text.replace("\"schema_version\": 1", "\"schema_version\": 7")).unwrap();
    assert!(matches!(import_training_set(dir.path()), Err(Error::Schema(_))));
    std::fs::write(&path, text.replace("\"pano_cols\": 360", "\"pano_cols\": 180")).unwrap();
    assert!(matches!(import_training_set(dir.path()), Err(Error::Shape(_))));
    std::fs::write(&path, text.replace("\"sway_area\"", "\"sway\"")).unwrap();
    assert!(matches!(import_training_set(dir.path()), Err(Error::Schema(_))));
}

#[test]
fn reordered_channels_load_by_name() {
    let dir = tempfile::tempdir().unwrap();
    export_small(dir.path());
    let reference = import_training_set(dir.path()).unwrap();
    // Swap pos_x and step_frequency in both the manifest and the payload.
    let path = dir.path().join(MANIFEST_FILE);
    let text = std::fs::read_to_string(&path).unwrap();
    let text = text
        .replace("\"pos_x\"", "\"TMP\"")
        .replace("\"step_frequency\"", "\"pos_x\"")
        .replace("\"TMP\"", "\"step_frequency\"");
    std::fs::write(&path, text).unwrap();
    let spath = dir.path().join(STATES_FILE);
    let mut bytes = std::fs::read(&spath).unwrap();
    for row in bytes.chunks_exact_mut(24 * 4) {
        let a: [u8; 4] = row[0..4].try_into().unwrap();
        let b: [u8; 4] = row[14 * 4..15 * 4].try_into().unwrap();
        row[0..4].copy_from_slice(&b);
        row[14 * 4..15 * 4].copy_from_slice(&a);
    }
    std::fs::write(&spath, bytes).unwrap();
    let swapped = import_training_set(dir.path()).unwrap();
    assert_eq!(swapped.window_states(1), reference.window_states(1));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn window_count_formula(n in 0usize..1500, stride in 1usize..60) {
        let expected = if n < 200 { 0 } else { (n - 200) / stride + 1 };
        prop_assert_eq!(window_count(n, stride), expected);
        if n <= 400 {
            let traj = Trajectory::without_scene("p", SceneKind::Indoor, walking_states(n)).unwrap();
            prop_assert_eq!(window_sequences(&traj, stride).unwrap().len(), expected);
        }
    }

    #[test]
    fn turning_radius_rigid_invariance(r in 0.8f64..6.0, angle in -3.1f64..3.1, dx in -50.0f64..50.0, dy in -50.0f64..50.0) {
        let path = circle_path(r, 120);
        let rot = Rotation2::new(angle);
        let moved: Vec<_> = path.iter().map(|p| rot * p + Vector2::new(dx, dy)).collect();
        let a = min_turning_radius(&path).unwrap();
        let b = min_turning_radius(&moved).unwrap();
        prop_assert!((a - b).abs() <= 1e-6 * a);
    }
}

#[test]
fn custom_split_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let traj = Trajectory::without_scene("c", SceneKind::Indoor, walking_states(130)).unwrap();
    let spec = WindowSpec {
        input_ticks: 80,
        label_ticks: 40,
    };
    let windows = window_sequences_with(&traj, spec, 5).unwrap();
    assert_eq!(windows.len(), spec.count(130, 5));
    assert_eq!(windows.len(), 3);
    assert_eq!((windows[2].input_states.len(), windows[2].label_states.len()), (80, 40));
    assert_eq!(windows[2].label_states[0], traj.states[90]);
    export_training_set(&windows, dir.path(), false).unwrap();
    let set = import_training_set(dir.path()).unwrap();
    assert_eq!(set.manifest.window_spec(), spec);
    assert_eq!(set.label_states(1).len(), 40);
    let pred_dir = dir.path().join("p");
    set.write_label_predictions(&pred_dir, "id").unwrap();
    let pred = import_predictions(&pred_dir).unwrap();
    assert!(score_predictions(&set, &pred).unwrap().iter().all(|c| c.losses.len() == 40));
    assert!(window_sequences_with(&traj, WindowSpec { input_ticks: 0, label_ticks: 5 }, 1).is_err());
}
