//! Synthetic walker: treadmill perturbation trials and scene walks.
//!
//! The body model is a kinematic stand-in, not biomechanics. Torso tilt is
//! a roll/pitch gait oscillation plus seeded jitter; each perturbation adds
//! a tilt impulse that ramps up over its duration and then recovers
//! exponentially.

pub mod path;
pub mod scene;

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::str::FromStr;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::TrialSeries;
use crate::error::{Error, Result};
use crate::frame::{PointCloud, Pose, UnitQuaternion};
use crate::state::{finite_difference_velocities, KinematicSample, StateVector, Timestamp, JOINT_COUNT, TICK_SECONDS};
use crate::sway::{project_torso_vertical, GroundProjection, SwayConfig, SwayTracker};

pub use path::WalkPath;
pub use scene::{Aabb, DepthSensor, Pillar, Scene, Wall};

pub const PERTURBATION_SECONDS: f64 = 0.3;
/// Perturbation magnitudes as fractions of body weight.
pub const MAGNITUDES: [f64; 2] = [0.075, 0.15];
pub const GAP_RANGE: (f64, f64) = (16.0, 21.0);
const GRAVITY: f64 = 9.81;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Front,
    Back,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [Direction::Front, Direction::Back, Direction::Left, Direction::Right];

    /// Unit push direction as (forward, left) in the heading frame.
    pub fn unit(self) -> (f64, f64) {
        match self {
            Direction::Front => (1.0, 0.0),
            Direction::Back => (-1.0, 0.0),
            Direction::Left => (0.0, 1.0),
            Direction::Right => (0.0, -1.0),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Treadmill,
    Indoor,
    OutdoorCluttered,
    OutdoorFree,
}

impl SceneKind {
    pub const ALL: [SceneKind; 4] = [
        SceneKind::Treadmill,
        SceneKind::Indoor,
        SceneKind::OutdoorCluttered,
        SceneKind::OutdoorFree,
    ];

    pub fn label(self) -> &'static str {
        match self {
            SceneKind::Treadmill => "treadmill",
            SceneKind::Indoor => "indoor",
            SceneKind::OutdoorCluttered => "outdoor_cluttered",
            SceneKind::OutdoorFree => "outdoor_free",
        }
    }
}

impl fmt::Display for SceneKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SceneKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SceneKind::ALL
            .into_iter()
            .find(|k| k.label() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown scene kind {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationSpec {
    pub onset: Timestamp,
    pub direction: Direction,
    /// Fraction of body weight.
    pub magnitude: f64,
    /// Seconds.
    pub duration: f64,
}

impl PerturbationSpec {
    pub fn new(onset: f64, direction: Direction, magnitude: f64) -> Result<Self> {
        Ok(Self {
            onset: Timestamp::new(onset)?,
            direction,
            magnitude,
            duration: PERTURBATION_SECONDS,
        })
    }

    pub fn end(&self) -> f64 {
        self.onset.secs() + self.duration
    }

    /// Normalized response: linear rise over the push, then exponential
    /// recovery.
    fn response(&self, t: f64, recovery: f64) -> f64 {
        let s = t - self.onset.secs();
        if s < 0.0 {
            0.0
        } else if s < self.duration {
            s / self.duration
        } else {
            (-(s - self.duration) / recovery).exp()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct WalkConfig {
    /// m/s.
    pub speed: f64,
    /// Hz.
    pub step_frequency: f64,
    /// Seconds.
    pub duration: f64,
    pub seed: u64,
    pub scene: SceneKind,
    /// Standard deviation of the per-tick tilt jitter, degrees.
    pub sway_noise_scale: f64,
    /// Correlation time of the jitter, seconds; 0 gives white jitter.
    pub jitter_correlation_time: f64,
    /// Seconds.
    pub recovery_time_constant: f64,
    /// Gait oscillation amplitudes, degrees.
    pub gait_roll_deg: f64,
    pub gait_pitch_deg: f64,
    /// Roll oscillation frequency as a multiple of the step frequency.
    pub gait_roll_frequency_ratio: f64,
    /// Phase lead of the pitch oscillation over roll, degrees.
    pub gait_phase_deg: f64,
    /// Peak perturbation tilt per unit body-weight fraction, degrees.
    pub tilt_deg_per_bw: f64,
    /// Relative gait amplitude increase per unit path curvature, m.
    pub turn_sway_gain: f64,
    /// Torso sensor height above ground, m.
    pub torso_height: f64,
    pub sensor: DepthSensor,
}

impl Default for WalkConfig {
    fn default() -> Self {
        Self {
            speed: 1.25,
            step_frequency: 1.9,
            duration: 60.0,
            seed: 0,
            scene: SceneKind::Treadmill,
            sway_noise_scale: 0.1,
            jitter_correlation_time: 0.5,
            recovery_time_constant: 1.0,
            gait_roll_deg: 2.0,
            gait_pitch_deg: 1.0,
            gait_roll_frequency_ratio: 0.5,
            gait_phase_deg: 90.0,
            tilt_deg_per_bw: 4.0 / 0.075,
            turn_sway_gain: 1.0,
            torso_height: 1.3,
            sensor: DepthSensor::default(),
        }
    }
}

impl WalkConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("speed", self.speed),
            ("duration", self.duration),
            ("step_frequency", self.step_frequency),
            ("recovery_time_constant", self.recovery_time_constant),
            ("sensor range", self.sensor.range),
            ("sensor step", self.sensor.step_deg),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {v}")));
            }
        }
        let non_negative = [
            ("sway_noise_scale", self.sway_noise_scale),
            ("jitter_correlation_time", self.jitter_correlation_time),
            ("gait_roll_deg", self.gait_roll_deg),
            ("gait_pitch_deg", self.gait_pitch_deg),
            ("gait_roll_frequency_ratio", self.gait_roll_frequency_ratio),
            ("gait_phase_deg", self.gait_phase_deg.abs()),
            ("tilt_deg_per_bw", self.tilt_deg_per_bw),
            ("turn_sway_gain", self.turn_sway_gain),
            ("torso_height", self.torso_height),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be >= 0, got {v}")));
            }
        }
        Ok(())
    }

    fn ticks(&self, duration: f64) -> usize {
        ((duration / TICK_SECONDS).round() as usize).max(1)
    }
}

/// One simulated trial on the 20 Hz grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimTrial {
    pub states: Vec<StateVector>,
    pub clouds: Vec<PointCloud>,
    pub truth: Vec<PerturbationSpec>,
    pub scene_label: SceneKind,
}

impl SimTrial {
    pub fn orientations(&self) -> Vec<(Timestamp, UnitQuaternion)> {
        self.states.iter().map(|s| (s.timestamp, s.orientation)).collect()
    }

    pub fn poses(&self) -> Vec<Pose> {
        self.states
            .iter()
            .map(|s| Pose::new(s.timestamp, s.position, s.orientation))
            .collect()
    }

    pub fn duration(&self) -> f64 {
        self.states.len() as f64 * TICK_SECONDS
    }

    /// Both detector metric traces together with the true onsets.
    pub fn detector_series(&self, id: impl Into<String>) -> Result<TrialSeries> {
        TrialSeries::from_orientations(
            id,
            &self.orientations(),
            self.truth.iter().map(|p| p.onset).collect(),
            SwayConfig::default(),
        )
    }
}

/// Draws a protocol schedule: gaps uniform in 16..21 s, direction and
/// magnitude uniform.
pub fn schedule_perturbations(duration: f64, seed: u64) -> Vec<PerturbationSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let mut t = 0.0;
    loop {
        t += rng.random_range(GAP_RANGE.0..=GAP_RANGE.1);
        let direction = Direction::ALL[rng.random_range(0..Direction::ALL.len())];
        let magnitude = MAGNITUDES[rng.random_range(0..MAGNITUDES.len())];
        if t + PERTURBATION_SECONDS > duration {
            break;
        }
        out.push(PerturbationSpec {
            onset: Timestamp::from_secs(t),
            direction,
            magnitude,
            duration: PERTURBATION_SECONDS,
        });
    }
    out
}

fn check_schedule(perturbations: &[PerturbationSpec], duration: f64) -> Result<Vec<PerturbationSpec>> {
    let mut sorted = perturbations.to_vec();
    for p in &sorted {
        if !(p.magnitude > 0.0 && p.magnitude.is_finite() && p.duration > 0.0 && p.duration.is_finite()) {
            return Err(Error::InvalidSchedule(format!(
                "perturbation at {} needs positive magnitude and duration",
                p.onset
            )));
        }
        if p.onset.secs() >= duration {
            return Err(Error::InvalidSchedule(format!(
                "perturbation at {} starts after the trial ends ({duration} s)",
                p.onset
            )));
        }
    }
    sorted.sort_by(|a, b| a.onset.secs().total_cmp(&b.onset.secs()));
    if let Some(w) = sorted.windows(2).find(|w| w[1].onset.secs() < w[0].end()) {
        return Err(Error::InvalidSchedule(format!(
            "perturbations at {} and {} overlap",
            w[0].onset, w[1].onset
        )));
    }
    Ok(sorted)
}

/// Heading-frame trajectory the body model rides on.
trait Course {
    /// Planar position, heading and signed curvature at time `t`.
    fn at(&self, t: f64) -> (Vector2<f64>, f64, f64);
}

struct Treadmill;

impl Course for Treadmill {
    fn at(&self, _t: f64) -> (Vector2<f64>, f64, f64) {
        (Vector2::zeros(), 0.0, 0.0)
    }
}

struct PathCourse<'a> {
    path: &'a WalkPath,
    speed: f64,
}

impl Course for PathCourse<'_> {
    fn at(&self, t: f64) -> (Vector2<f64>, f64, f64) {
        let s = (t * self.speed).max(0.0);
        let tangent = self.path.tangent(s);
        (self.path.at(s), tangent.y.atan2(tangent.x), self.path.curvature(s))
    }
}

fn joint_template(t: f64, step_frequency: f64, roll: f64) -> [f64; JOINT_COUNT] {
    // One stride is two steps.
    let phase = PI * step_frequency * t;
    let knee = |p: f64| 0.35 + 0.3 * (p - PI / 3.0).sin();
    [
        0.35 * phase.sin(),
        0.35 * (phase + PI).sin(),
        0.06 * (phase + FRAC_PI_2).sin(),
        0.06 * (phase + FRAC_PI_2 + PI).sin(),
        0.08 * phase.cos(),
        0.08 * (phase + PI).cos(),
        knee(phase),
        knee(phase + PI),
        0.1 * phase.sin() - roll,
    ]
}

struct BodyOutput {
    samples: Vec<KinematicSample>,
    sway: Vec<f64>,
}

fn simulate_body(cfg: &WalkConfig, course: &dyn Course, n: usize, perturbations: &[PerturbationSpec]) -> Result<BodyOutput> {
    let sway_cfg = SwayConfig::default();
    let warmup = sway_cfg.window_len - 1;
    let mut tracker = SwayTracker::new(sway_cfg)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    // AR(1) jitter with stationary standard deviation `sway_noise_scale`.
    let rho = if cfg.jitter_correlation_time > 0.0 {
        (-TICK_SECONDS / cfg.jitter_correlation_time).exp()
    } else {
        0.0
    };
    let innovation = Normal::new(0.0, cfg.sway_noise_scale.to_radians() * (1.0 - rho * rho).sqrt())
        .map_err(|e| Error::InvalidInput(format!("jitter scale: {e}")))?;
    let stationary = Normal::new(0.0, cfg.sway_noise_scale.to_radians())
        .map_err(|e| Error::InvalidInput(format!("jitter scale: {e}")))?;
    let mut jitter = Vector2::new(stationary.sample(&mut rng), stationary.sample(&mut rng));
    let omega = 2.0 * PI * cfg.step_frequency;
    let (roll_amp, pitch_amp) = (cfg.gait_roll_deg.to_radians(), cfg.gait_pitch_deg.to_radians());
    let gain_per_bw = cfg.tilt_deg_per_bw.to_radians();
    let phase = cfg.gait_phase_deg.to_radians();

    let mut samples = Vec::with_capacity(n);
    let mut sway = Vec::with_capacity(n);
    for k in 0..warmup + n {
        let t = (k as f64 - warmup as f64) * TICK_SECONDS;
        let (xy, heading, curvature) = course.at(t);
        let turn = 1.0 + cfg.turn_sway_gain * curvature.abs();
        if k > 0 {
            jitter = jitter * rho + Vector2::new(innovation.sample(&mut rng), innovation.sample(&mut rng));
        }
        let mut forward = turn * pitch_amp * (omega * t + phase).sin() + jitter.x;
        let mut left = turn * roll_amp * (cfg.gait_roll_frequency_ratio * omega * t).sin() + jitter.y;
        left += (cfg.speed * cfg.speed * curvature / GRAVITY).atan();
        for p in perturbations {
            let h = p.response(t, cfg.recovery_time_constant);
            if h != 0.0 {
                let (df, dl) = p.direction.unit();
                let peak = p.magnitude * gain_per_bw;
                forward += peak * h * df;
                left += peak * h * dl;
            }
        }
        let orientation =
            UnitQuaternion::from_yaw(heading) * UnitQuaternion::from_rotation_vector(Vector3::new(-left, forward, 0.0));
        let timestamp = Timestamp::from_secs(t.max(0.0));
        let sample = tracker.push(&GroundProjection {
            timestamp,
            point: project_torso_vertical(&orientation),
        })?;
        if k < warmup {
            continue;
        }
        sway.push(sample.map_or(0.0, |s| s.sigma_z));
        let bob = 0.02 * (omega * t).cos();
        samples.push(KinematicSample {
            timestamp: Timestamp::from_tick(k - warmup),
            position: Vector3::new(xy.x, xy.y, cfg.torso_height + bob),
            orientation,
            step_frequency: cfg.step_frequency,
            joint_angles: joint_template(t, cfg.step_frequency, left),
        });
    }
    Ok(BodyOutput { samples, sway })
}

fn assemble(body: BodyOutput) -> Vec<StateVector> {
    let velocities = finite_difference_velocities(&body.samples, TICK_SECONDS);
    body.samples
        .iter()
        .zip(velocities)
        .zip(body.sway)
        .map(|((s, (lin, ang)), sway_area)| StateVector {
            timestamp: s.timestamp,
            position: s.position,
            orientation: s.orientation,
            linear_velocity: lin,
            angular_velocity: ang,
            sway_area,
            step_frequency: s.step_frequency,
            joint_angles: s.joint_angles,
        })
        .collect()
}

/// Treadmill walk with injected perturbations. The walker stays in place and
/// the scene is empty, so every cloud is empty.
pub fn simulate_treadmill_trial(cfg: &WalkConfig, perturbations: &[PerturbationSpec]) -> Result<SimTrial> {
    cfg.validate()?;
    let truth = check_schedule(perturbations, cfg.duration)?;
    let n = cfg.ticks(cfg.duration);
    let states = assemble(simulate_body(cfg, &Treadmill, n, &truth)?);
    let clouds = states
        .iter()
        .map(|s| PointCloud::empty(s.timestamp, Pose::new(s.timestamp, s.position, s.orientation)))
        .collect();
    Ok(SimTrial {
        states,
        clouds,
        truth,
        scene_label: SceneKind::Treadmill,
    })
}

/// Walks the smoothed waypoint path through procedurally generated
/// surroundings for `cfg.scene`.
pub fn simulate_walk_scene(cfg: &WalkConfig, waypoints: &[Vector2<f64>]) -> Result<SimTrial> {
    let path = WalkPath::through(waypoints)?;
    let scene = Scene::for_route(cfg.scene, &path, cfg.seed);
    simulate_walk_in(cfg, &path, &scene)
}

/// Walks `path` through a given scene. The trial lasts until the path ends
/// or `cfg.duration` elapses, whichever is first.
pub fn simulate_walk_in(cfg: &WalkConfig, path: &WalkPath, scene: &Scene) -> Result<SimTrial> {
    cfg.validate()?;
    scene.validate()?;
    let duration = cfg.duration.min(path.length() / cfg.speed);
    let n = cfg.ticks(duration) + 1;
    let course = PathCourse { path, speed: cfg.speed };
    let states = assemble(simulate_body(cfg, &course, n, &[])?);
    let rays = cfg.sensor.rays();
    let clouds = states
        .par_iter()
        .map(|s| {
            let pose = Pose::new(s.timestamp, s.position, s.orientation);
            cfg.sensor.capture(scene, &pose, &rays)
        })
        .collect();
    Ok(SimTrial {
        states,
        clouds,
        truth: vec![],
        scene_label: cfg.scene,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BatchConfig {
    pub trials: usize,
    /// Seconds per trial.
    pub duration: f64,
    pub seed: u64,
    pub walk: WalkConfig,
}

impl Default for BatchConfig {
    fn default() -> Self {
        Self {
            trials: 192,
            duration: 30.0,
            seed: 0,
            walk: WalkConfig {
                duration: 30.0,
                ..WalkConfig::default()
            },
        }
    }
}

/// Detector inputs for a perturbation batch and its unperturbed controls.
#[derive(Debug, Clone, PartialEq)]
pub struct TreadmillBatch {
    pub perturbed: Vec<TrialSeries>,
    /// Perturbation magnitude of each perturbed trial.
    pub magnitudes: Vec<f64>,
    /// Same seeds as `perturbed`, without perturbations.
    pub controls: Vec<TrialSeries>,
}

impl TreadmillBatch {
    pub fn with_magnitude(&self, magnitude: f64) -> Vec<TrialSeries> {
        self.perturbed
            .iter()
            .zip(&self.magnitudes)
            .filter(|(_, &m)| m == magnitude)
            .map(|(t, _)| t.clone())
            .collect()
    }
}

/// Per-trial perturbation of a batch: magnitudes alternate, directions
/// cycle, onsets are uniform in the protocol gap range.
pub fn batch_perturbation(batch: &BatchConfig, index: usize) -> Result<PerturbationSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(batch.seed.wrapping_add(index as u64) ^ 0xba7c);
    let latest = (batch.duration - PERTURBATION_SECONDS).min(GAP_RANGE.1);
    if latest < GAP_RANGE.0 {
        return Err(Error::InvalidInput(format!(
            "batch trials of {} s cannot hold a perturbation after {} s",
            batch.duration, GAP_RANGE.0
        )));
    }
    PerturbationSpec::new(
        rng.random_range(GAP_RANGE.0..=latest),
        Direction::ALL[(index / MAGNITUDES.len()) % Direction::ALL.len()],
        MAGNITUDES[index % MAGNITUDES.len()],
    )
}

/// One protocol trial and its unperturbed control.
#[derive(Debug, Clone, PartialEq)]
pub struct BatchTrial {
    pub index: usize,
    pub perturbation: PerturbationSpec,
    pub perturbed: SimTrial,
    pub control: SimTrial,
}

impl BatchTrial {
    pub fn perturbed_id(&self) -> String {
        format!("trial_{:03}", self.index)
    }

    pub fn control_id(&self) -> String {
        format!("control_{:03}", self.index)
    }
}

/// Simulates `trials` seeded treadmill trials with one perturbation each,
/// plus a paired control per trial, in parallel.
pub fn treadmill_batch_trials(batch: &BatchConfig) -> Result<Vec<BatchTrial>> {
    (0..batch.trials)
        .into_par_iter()
        .map(|i| {
            let cfg = WalkConfig {
                seed: batch.seed.wrapping_add(i as u64),
                duration: batch.duration,
                scene: SceneKind::Treadmill,
                ..batch.walk
            };
            let spec = batch_perturbation(batch, i)?;
            Ok(BatchTrial {
                index: i,
                perturbation: spec,
                perturbed: simulate_treadmill_trial(&cfg, &[spec])?,
                control: simulate_treadmill_trial(&cfg, &[])?,
            })
        })
        .collect()
}

/// Detector inputs of [`treadmill_batch_trials`], without keeping the trials.
pub fn treadmill_batch(batch: &BatchConfig) -> Result<TreadmillBatch> {
    let results: Vec<(TrialSeries, f64, TrialSeries)> = (0..batch.trials)
        .into_par_iter()
        .map(|i| {
            let cfg = WalkConfig {
                seed: batch.seed.wrapping_add(i as u64),
                duration: batch.duration,
                scene: SceneKind::Treadmill,
                ..batch.walk
            };
            let spec = batch_perturbation(batch, i)?;
            let perturbed = simulate_treadmill_trial(&cfg, &[spec])?.detector_series(format!("trial_{i:03}"))?;
            let control = simulate_treadmill_trial(&cfg, &[])?.detector_series(format!("control_{i:03}"))?;
            Ok((perturbed, spec.magnitude, control))
        })
        .collect::<Result<_>>()?;
    let mut out = TreadmillBatch {
        perturbed: Vec::with_capacity(results.len()),
        magnitudes: Vec::with_capacity(results.len()),
        controls: Vec::with_capacity(results.len()),
    };
    for (p, m, c) in results {
        out.perturbed.push(p);
        out.magnitudes.push(m);
        out.controls.push(c);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn schedule_counts_and_determinism() {
        assert!(schedule_perturbations(10.0, 1).is_empty());
        for seed in 0..500 {
            let s = schedule_perturbations(100.0, seed);
            assert!((4..=6).contains(&s.len()), "seed {seed}: {}", s.len());
            let mut prev = 0.0;
            for p in &s {
                let gap = p.onset.secs() - prev;
                assert!((16.0..=21.0).contains(&gap));
                assert!(MAGNITUDES.contains(&p.magnitude));
                prev = p.onset.secs();
            }
        }
        assert_eq!(schedule_perturbations(100.0, 9), schedule_perturbations(100.0, 9));
    }

    #[test]
    fn overlapping_schedule_rejected() {
        let cfg = WalkConfig {
            duration: 30.0,
            ..WalkConfig::default()
        };
        let a = PerturbationSpec::new(10.0, Direction::Front, 0.15).unwrap();
        let b = PerturbationSpec::new(10.2, Direction::Left, 0.075).unwrap();
        let err = simulate_treadmill_trial(&cfg, &[a, b]).unwrap_err();
        assert!(matches!(err, Error::InvalidSchedule(_)));
        let late = PerturbationSpec::new(40.0, Direction::Front, 0.15).unwrap();
        assert!(simulate_treadmill_trial(&cfg, &[late]).is_err());
    }

    #[test]
    fn response_shape() {
        let p = PerturbationSpec::new(5.0, Direction::Back, 0.15).unwrap();
        assert_eq!(p.response(4.9, 1.0), 0.0);
        assert!((p.response(5.15, 1.0) - 0.5).abs() < 1e-12);
        assert!((p.response(5.3, 1.0) - 1.0).abs() < 1e-12);
        assert!((p.response(6.3, 1.0) - (-1f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn scene_kind_parses() {
        for k in SceneKind::ALL {
            assert_eq!(k.label().parse::<SceneKind>().unwrap(), k);
        }
        assert!("mall".parse::<SceneKind>().is_err());
    }
}
