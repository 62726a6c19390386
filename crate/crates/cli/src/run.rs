use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector2;
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use swaywatch::dataset::exchange::{ExchangeWriter, SetKind};
use swaywatch::dataset::files::{read_states_csv, read_trial, write_trial, Split, Subset, TrialTruth, TRIAL_STATES, TRIAL_TRUTH};
use swaywatch::dataset::{
    curvature_filter, import_predictions, import_training_set, trajectory_from_trial, window_sequences_with, Trajectory,
    WindowMeta, WindowSpec, SCHEMA_VERSION,
};
use swaywatch::detector::{compare_metrics, DetectionReport, DetectorConfig, Metric, TrialSeries};
use swaywatch::eval::{horizon_report, score_predictions};
use swaywatch::panorama::{COLS, MAX_DEPTH, ROWS};
use swaywatch::simgait::{
    schedule_perturbations, simulate_treadmill_trial, simulate_walk_in, treadmill_batch_trials, BatchConfig, Scene,
    SceneKind, SimTrial, WalkConfig, WalkPath,
};
use swaywatch::sway::{project_stream, sway_series, torso_tilt_series, SwayConfig};
use swaywatch::{Timestamp, UnitQuaternion, TICK_SECONDS};

use crate::args::*;
use crate::CliError;

type Result<T> = std::result::Result<T, CliError>;

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate(Simulate::Treadmill(a)) => simulate_treadmill(cli, a),
        Command::Simulate(Simulate::Walk(a)) => simulate_walk(cli, a),
        Command::Detect(a) => detect(cli, a),
        Command::Dataset(a) => dataset(cli, a),
        Command::Identity(a) => identity(cli, a),
        Command::Eval(a) => eval(cli, a),
    }
}

fn io(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(io(dir))
}

/// Writes the invocation and the resolved settings next to the outputs.
fn log_config(cli: &Cli, out: &Path, resolved: Value) -> Result<()> {
    create_dir(out)?;
    let config = json!({
        "invocation": cli,
        "resolved": resolved,
        "constants": {
            "tick_seconds": TICK_SECONDS,
            "panorama_rows": ROWS,
            "panorama_cols": COLS,
            "max_depth_m": MAX_DEPTH,
            "schema_version": SCHEMA_VERSION,
        },
        "version": env!("CARGO_PKG_VERSION"),
    });
    log::info!("resolved config: {config}");
    let path = out.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(&config)? + "\n").map_err(io(&path))
}

fn emit(cli: &Cli, json_value: &Value, text: &str) -> Result<()> {
    if cli.json {
        println!("{}", serde_json::to_string_pretty(json_value)?);
    } else {
        print!("{text}");
    }
    Ok(())
}

fn walk_config(gait: &GaitArgs, duration: f64, scene: SceneKind) -> Result<WalkConfig> {
    let cfg = WalkConfig {
        speed: gait.speed,
        step_frequency: gait.step_frequency,
        duration,
        seed: gait.seed,
        scene,
        sway_noise_scale: gait.noise,
        ..WalkConfig::default()
    };
    cfg.validate()?;
    Ok(cfg)
}

fn simulate_treadmill(cli: &Cli, a: &TreadmillArgs) -> Result<()> {
    let out = &a.out.out;
    let default_duration = if a.batch { 30.0 } else { 60.0 };
    let walk = walk_config(&a.gait, a.gait.duration.unwrap_or(default_duration), SceneKind::Treadmill)?;
    let n = a.trials.unwrap_or(if a.batch { 192 } else { 1 });
    if n == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    let mut written: Vec<(String, SimTrial)> = Vec::new();
    if a.batch {
        let batch = BatchConfig {
            trials: n,
            duration: walk.duration,
            seed: walk.seed,
            walk,
        };
        log_config(cli, out, json!({ "batch": batch, "controls": a.controls }))?;
        for t in treadmill_batch_trials(&batch)? {
            let (pid, cid) = (t.perturbed_id(), t.control_id());
            written.push((pid, t.perturbed));
            if a.controls {
                written.push((cid, t.control));
            }
        }
    } else {
        log_config(cli, out, json!({ "walk": walk, "trials": n, "controls": a.controls }))?;
        let trials: Vec<Vec<(String, SimTrial)>> = (0..n)
            .into_par_iter()
            .map(|i| {
                let cfg = WalkConfig {
                    seed: walk.seed.wrapping_add(i as u64),
                    ..walk
                };
                let schedule = schedule_perturbations(cfg.duration, cfg.seed);
                let mut v = vec![(format!("trial_{i:03}"), simulate_treadmill_trial(&cfg, &schedule)?)];
                if a.controls {
                    v.push((format!("control_{i:03}"), simulate_treadmill_trial(&cfg, &[])?));
                }
                Ok(v)
            })
            .collect::<Result<_>>()?;
        written = trials.into_iter().flatten().collect();
    }
    written
        .par_iter()
        .try_for_each(|(id, trial)| write_trial(&out.join(id), trial))?;
    let events: usize = written.iter().map(|(_, t)| t.truth.len()).sum();
    emit(
        cli,
        &json!({ "out": out, "trials": written.len(), "perturbations": events }),
        &format!("wrote {} trials ({events} perturbations) to {}\n", written.len(), out.display()),
    )
}

fn parse_waypoints(text: &str) -> Result<Vec<Vector2<f64>>> {
    text.split(';')
        .filter(|s| !s.trim().is_empty())
        .map(|pair| {
            let xy: Vec<f64> = pair
                .split(',')
                .map(|v| v.trim().parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| CliError::Usage(format!("waypoint {pair:?}: {e}")))?;
            match xy[..] {
                [x, y] if x.is_finite() && y.is_finite() => Ok(Vector2::new(x, y)),
                _ => Err(CliError::Usage(format!("waypoint {pair:?} is not `x,y`"))),
            }
        })
        .collect()
}

fn simulate_walk(cli: &Cli, a: &WalkArgs) -> Result<()> {
    let out = &a.out.out;
    let waypoints = parse_waypoints(&a.waypoints)?;
    let path = WalkPath::through(&waypoints)?;
    let kind = SceneKind::from(a.scene);
    let duration = a.gait.duration.unwrap_or(path.length() / a.gait.speed.max(f64::MIN_POSITIVE));
    let cfg = walk_config(&a.gait, duration, kind)?;
    let scene = match &a.scene_file {
        Some(file) => Scene::from_json_file(file)?,
        None => Scene::for_route(kind, &path, cfg.seed),
    };
    log_config(cli, out, json!({ "walk": cfg, "waypoints": waypoints, "route_length_m": path.length() }))?;
    let trial = simulate_walk_in(&cfg, &path, &scene)?;
    write_trial(&out.join(&a.id), &trial)?;
    emit(
        cli,
        &json!({ "out": out.join(&a.id), "ticks": trial.states.len(), "duration_s": trial.duration() }),
        &format!(
            "wrote {} ticks ({:.2} s, {}) to {}\n",
            trial.states.len(),
            trial.duration(),
            kind.label(),
            out.join(&a.id).display()
        ),
    )
}

/// `input` itself if it holds a trial, else its trial subdirectories in name order.
fn trial_dirs(input: &Path) -> Result<Vec<PathBuf>> {
    if input.join(TRIAL_STATES).is_file() {
        return Ok(vec![input.to_path_buf()]);
    }
    let mut dirs: Vec<PathBuf> = fs::read_dir(input)
        .map_err(io(input))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.join(TRIAL_STATES).is_file())
        .collect();
    dirs.sort();
    if dirs.is_empty() {
        return Err(CliError::Core(swaywatch::Error::InvalidInput(format!(
            "{} holds no trial directories",
            input.display()
        ))));
    }
    Ok(dirs)
}

fn trial_id(dir: &Path) -> String {
    dir.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| dir.display().to_string())
}

struct TrialInput {
    id: String,
    orientations: Vec<(Timestamp, UnitQuaternion)>,
    truth: Vec<swaywatch::simgait::PerturbationSpec>,
}

impl TrialInput {
    fn from_trial(id: String, trial: &SimTrial) -> Self {
        Self {
            id,
            orientations: trial.orientations(),
            truth: trial.truth.clone(),
        }
    }

    fn read(dir: &Path) -> Result<Self> {
        let states = read_states_csv(&dir.join(TRIAL_STATES))?;
        let path = dir.join(TRIAL_TRUTH);
        let text = fs::read_to_string(&path).map_err(io(&path))?;
        let truth: TrialTruth = serde_json::from_str(&text)?;
        Ok(Self {
            id: trial_id(dir),
            orientations: states.iter().map(|s| (s.timestamp, s.orientation)).collect(),
            truth: truth.perturbations,
        })
    }

    /// The magnitude shared by all of this trial's perturbations.
    fn magnitude(&self) -> Option<f64> {
        let first = self.truth.first()?.magnitude;
        self.truth.iter().all(|p| p.magnitude == first).then_some(first)
    }
}

#[derive(Serialize)]
struct MagnitudeRow {
    magnitude: f64,
    trials: usize,
    sway_detection_rate: Option<f64>,
    sway_peak_to_noise: Option<f64>,
    angle_detection_rate: Option<f64>,
    angle_peak_to_noise: Option<f64>,
}

#[derive(Serialize)]
struct ControlRow {
    trials: usize,
    sway_false_positives: usize,
    angle_false_positives: usize,
}

fn write_trace(path: &Path, input: &TrialInput, sway: SwayConfig, report: &DetectionReport, index: usize) -> Result<()> {
    let sigma = sway_series(&project_stream(&input.orientations), sway)?;
    let tilt = torso_tilt_series(&input.orientations, sway.tick_seconds);
    let offset = input.orientations.len() - sigma.len();
    let onsets: Vec<Timestamp> = report.trials[index].events.iter().map(|e| e.onset).collect();
    let mut text = String::from("tick,sigma_z,delta_sigma_z,theta_z,delta_theta_z,event_flag\n");
    for (tick, (t, _)) in input.orientations.iter().enumerate() {
        let (s, ds) = match tick.checked_sub(offset).map(|k| &sigma[k]) {
            Some(s) => (s.sigma_z.to_string(), s.delta_sigma_z.to_string()),
            None => (String::new(), String::new()),
        };
        let flag = u8::from(onsets.contains(t));
        let _ = writeln!(text, "{tick},{s},{ds},{},{},{flag}", tilt[tick].theta_z, tilt[tick].delta_theta_z);
    }
    fs::write(path, text).map_err(io(path))
}

fn strip_trials(report: &DetectionReport) -> Result<Value> {
    let mut v = serde_json::to_value(report)?;
    if let Some(map) = v.as_object_mut() {
        map.remove("trials");
    }
    Ok(v)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |x| x.to_string())
}

fn detect(cli: &Cli, a: &DetectArgs) -> Result<()> {
    let out = &a.out.out;
    let sway = SwayConfig::from(a.sway);
    let config = DetectorConfig::from(a.detector);
    let inputs: Vec<TrialInput> = if a.batch {
        let duration = a.gait.duration.unwrap_or(30.0);
        let walk = walk_config(&a.gait, duration, SceneKind::Treadmill)?;
        let batch = BatchConfig {
            trials: a.trials,
            duration,
            seed: walk.seed,
            walk,
        };
        log_config(cli, out, json!({ "batch": batch, "sway": sway, "detector": config }))?;
        treadmill_batch_trials(&batch)?
            .into_iter()
            .flat_map(|t| {
                [
                    TrialInput::from_trial(t.perturbed_id(), &t.perturbed),
                    TrialInput::from_trial(t.control_id(), &t.control),
                ]
            })
            .collect()
    } else {
        let input = a.input.as_ref().expect("clap requires --input without --batch");
        let dirs = trial_dirs(input)?;
        log_config(cli, out, json!({ "trials": dirs, "sway": sway, "detector": config }))?;
        dirs.par_iter().map(|d| TrialInput::read(d)).collect::<Result<_>>()?
    };
    let series: Vec<TrialSeries> = inputs
        .par_iter()
        .map(|t| TrialSeries::from_orientations(&t.id, &t.orientations, t.truth.iter().map(|p| p.onset).collect(), sway))
        .collect::<swaywatch::Result<_>>()?;
    let (sway_report, angle_report) = compare_metrics(&series, &config)?;

    let mut groups: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    let mut controls = Vec::new();
    for (i, t) in inputs.iter().enumerate() {
        match t.magnitude() {
            Some(m) => groups.entry(m.to_bits()).or_default().push(i),
            None if t.truth.is_empty() => controls.push(i),
            None => {}
        }
    }
    let subset = |idx: &[usize]| idx.iter().map(|&i| series[i].clone()).collect::<Vec<_>>();
    let mut by_magnitude = Vec::new();
    for (bits, idx) in &groups {
        let (s, an) = compare_metrics(&subset(idx), &config)?;
        by_magnitude.push(MagnitudeRow {
            magnitude: f64::from_bits(*bits),
            trials: idx.len(),
            sway_detection_rate: s.detection_rate,
            sway_peak_to_noise: s.mean_peak_to_noise,
            angle_detection_rate: an.detection_rate,
            angle_peak_to_noise: an.mean_peak_to_noise,
        });
    }
    by_magnitude.sort_by(|x, y| x.magnitude.total_cmp(&y.magnitude));
    let control_row = ControlRow {
        trials: controls.len(),
        sway_false_positives: controls.iter().map(|&i| sway_report.trials[i].false_positives).sum(),
        angle_false_positives: controls.iter().map(|&i| angle_report.trials[i].false_positives).sum(),
    };

    if !a.no_traces {
        let dir = out.join("traces");
        create_dir(&dir)?;
        inputs
            .par_iter()
            .enumerate()
            .try_for_each(|(i, t)| write_trace(&dir.join(format!("{}.csv", t.id)), t, sway, &sway_report, i))?;
    }
    let full = json!({
        "sway_area": sway_report,
        "torso_angle": angle_report,
        "by_magnitude": by_magnitude,
        "controls": control_row,
    });
    let path = out.join("report.json");
    fs::write(&path, serde_json::to_string_pretty(&full)? + "\n").map_err(io(&path))?;

    let summary = json!({
        "sway_area": strip_trials(&sway_report)?,
        "torso_angle": strip_trials(&angle_report)?,
        "by_magnitude": by_magnitude,
        "controls": control_row,
        "report": path,
    });
    let mut text = String::new();
    for r in [&sway_report, &angle_report] {
        let label = match r.metric {
            Metric::SwayArea => "sway_area",
            Metric::TorsoAngle => "torso_angle",
        };
        let _ = writeln!(
            text,
            "{label}: trials={} true_events={} detected={} detection_rate={} false_positives={} \
             false_positives_per_minute={} peak_to_noise={}",
            r.n_trials,
            r.n_true_events,
            r.n_detected,
            fmt_opt(r.detection_rate),
            r.false_positives,
            r.false_positives_per_minute,
            fmt_opt(r.mean_peak_to_noise)
        );
    }
    for m in &by_magnitude {
        let _ = writeln!(
            text,
            "magnitude {}: trials={} sway detection_rate={} peak_to_noise={} | angle detection_rate={} peak_to_noise={}",
            m.magnitude,
            m.trials,
            fmt_opt(m.sway_detection_rate),
            fmt_opt(m.sway_peak_to_noise),
            fmt_opt(m.angle_detection_rate),
            fmt_opt(m.angle_peak_to_noise)
        );
    }
    if control_row.trials > 0 {
        let _ = writeln!(
            text,
            "controls: trials={} sway false_positives={} angle false_positives={}",
            control_row.trials, control_row.sway_false_positives, control_row.angle_false_positives
        );
    }
    emit(cli, &summary, &text)
}

fn dataset(cli: &Cli, a: &DatasetArgs) -> Result<()> {
    let out = &a.out.out;
    let spec = WindowSpec {
        input_ticks: a.input_ticks,
        label_ticks: a.label_ticks,
    };
    spec.validate()?;
    if a.stride == 0 {
        return Err(CliError::Usage("--stride must be at least 1".into()));
    }
    if a.queue_capacity == 0 {
        return Err(CliError::Usage("--queue-capacity must be at least 1".into()));
    }
    if !(a.max_radius > 0.0) {
        return Err(CliError::Usage("--max-radius must be positive".into()));
    }
    let mut dirs = trial_dirs(&a.input)?;
    if let (Some(split), Some(subset)) = (&a.split, a.subset) {
        let split = Split::read(split)?;
        let ids = split.ids(match subset {
            SubsetArg::Train => Subset::Train,
            SubsetArg::Test => Subset::Test,
        });
        dirs.retain(|d| ids.contains(&trial_id(d)));
    }
    log_config(
        cli,
        out,
        json!({
            "trials": dirs,
            "window": spec,
            "stride": a.stride,
            "curvature_filter": (!a.no_curvature_filter).then_some(a.max_radius),
            "queue_capacity": a.queue_capacity,
            "panoramas": !a.no_panoramas,
        }),
    )?;
    let mut writer = ExchangeWriter::create_with(out, SetKind::TrainingSet, None, !a.no_panoramas, spec)?;
    let (mut before, mut kept) = (0usize, 0usize);
    let mut per_scenario: BTreeMap<&'static str, usize> = BTreeMap::new();
    for dir in &dirs {
        let id = trial_id(dir);
        let trial = read_trial(dir)?;
        let traj = if a.no_panoramas {
            Trajectory::without_scene(&id, trial.scene_label, trial.states)?
        } else {
            trajectory_from_trial(&id, &trial, a.queue_capacity)?
        };
        let windows = window_sequences_with(&traj, spec, a.stride)?;
        before += windows.len();
        let windows = if a.no_curvature_filter {
            windows
        } else {
            curvature_filter(windows, a.max_radius)?
        };
        log::info!("{id}: {} ticks, {} windows kept", traj.len(), windows.len());
        for w in &windows {
            let meta = WindowMeta {
                source_id: w.source_id.clone(),
                scenario: w.scenario,
                start_tick: w.start_tick,
                start_time: w.input_states[0].timestamp.secs(),
            };
            let rows: Vec<[f32; 24]> = w.states().map(|s| s.to_array().map(|v| v as f32)).collect();
            let panos = (!a.no_panoramas).then(|| w.panoramas().map(|p| p.grid.as_slice()));
            writer.push(meta, &rows, panos)?;
            *per_scenario.entry(w.scenario.label()).or_default() += 1;
        }
        kept += windows.len();
    }
    writer.finish()?;
    emit(
        cli,
        &json!({ "out": out, "trials": dirs.len(), "windows": kept, "windows_before_filter": before, "by_scenario": per_scenario }),
        &format!(
            "exported {kept} windows ({before} before curvature filter) from {} trials to {}\n",
            dirs.len(),
            out.display()
        ),
    )
}

fn identity(cli: &Cli, a: &IdentityArgs) -> Result<()> {
    let out = &a.out.out;
    let set = import_training_set(&a.input)?;
    log_config(cli, out, json!({ "source": a.input, "variant": a.variant }))?;
    set.write_label_predictions(out, &a.variant)?;
    emit(
        cli,
        &json!({ "out": out, "windows": set.n_windows(), "variant": a.variant }),
        &format!("wrote {} identity predictions to {}\n", set.n_windows(), out.display()),
    )
}

fn eval(cli: &Cli, a: &EvalArgs) -> Result<()> {
    let out = &a.out.out;
    let truth = import_training_set(&a.truth)?;
    log_config(cli, out, json!({ "truth": a.truth, "predictions": a.preds }))?;
    let mut cases = Vec::new();
    for p in &a.preds {
        let pred = import_predictions(p)?;
        cases.extend(score_predictions(&truth, &pred)?);
    }
    let (curves, files) = horizon_report(&cases, out)?;
    let mut text = String::from("scenario variant metric n final_mean overall_mean\n");
    let mut rows = Vec::new();
    for c in &curves {
        let last = *c.mean.last().unwrap_or(&0.0);
        let overall = *c.cumulative_mean().last().unwrap_or(&0.0);
        let _ = writeln!(text, "{} {} {} {} {last} {overall}", c.scenario, c.variant, c.metric.label(), c.n);
        rows.push(json!({
            "scenario": c.scenario,
            "variant": c.variant,
            "metric": c.metric,
            "n": c.n,
            "final_mean": last,
            "overall_mean": overall,
        }));
    }
    let _ = writeln!(text, "wrote {}", files.combined_csv.display());
    emit(cli, &json!({ "curves": rows, "csv": files.combined_csv, "plots": files.plots }), &text)
}
