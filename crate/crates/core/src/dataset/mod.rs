//! 20 Hz trajectories, training windows, the curvature filter and the file
//! formats.

pub mod exchange;
pub mod files;

use std::sync::Arc;

use nalgebra::{Vector2, Vector3};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{Pose, UnitQuaternion};
use crate::panorama::{rasterize_clouds, DepthPanorama};
use crate::simgait::{SceneKind, SimTrial};
use crate::state::{finite_difference_velocities, KinematicSample, StateVector, Timestamp, JOINT_COUNT, TICK_SECONDS};
use crate::sway::{project_torso_vertical, GroundProjection, SwayConfig, SwayTracker};

pub use exchange::{
    export_predictions, export_training_set, import_predictions, import_training_set, ExchangeSet, ExchangeWindow,
    Manifest, WindowMeta, SCHEMA_VERSION,
};

/// Scenario tags share the simulator's scene kinds.
pub type Scenario = SceneKind;

pub const INPUT_TICKS: usize = 150;
pub const LABEL_TICKS: usize = 50;
pub const WINDOW_TICKS: usize = INPUT_TICKS + LABEL_TICKS;
pub const DEFAULT_STRIDE: usize = 20;
/// Largest raw sampling gap resampling will bridge, seconds.
pub const MAX_GAP: f64 = 0.25;
pub const SMOOTHING_TAPS: usize = 21;
/// Windows whose path turns tighter than this radius pass the filter, m.
pub const DEFAULT_MAX_RADIUS: f64 = 2.0;
const CURVATURE_FLOOR: f64 = 1e-6;
const GRID_EPS: f64 = 1e-9;

/// One raw sensor reading at an arbitrary time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RawSample {
    pub t: f64,
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion,
    pub step_frequency: f64,
    pub joint_angles: [f64; JOINT_COUNT],
}

/// Zero-order-hold resampling onto `t = k * 0.05`. The grid starts at the
/// first tick not before the first sample.
pub fn resample_20hz(raw: &[RawSample]) -> Result<Vec<KinematicSample>> {
    let (Some(first), Some(last)) = (raw.first(), raw.last()) else {
        return Ok(vec![]);
    };
    for w in raw.windows(2) {
        let (a, b) = (w[0].t, w[1].t);
        if !(b >= a) {
            return Err(Error::InvalidInput(format!("timestamps not monotone at t={a} -> t={b}")));
        }
        if b - a > MAX_GAP {
            return Err(Error::Gap { start: a, end: b });
        }
    }
    if !(first.t >= 0.0 && last.t.is_finite()) {
        return Err(Error::InvalidInput(format!("first timestamp {} must be >= 0", first.t)));
    }
    let k0 = (first.t / TICK_SECONDS - GRID_EPS).ceil().max(0.0) as usize;
    let k1 = (last.t / TICK_SECONDS + GRID_EPS).floor() as usize;
    let mut out = Vec::with_capacity(k1.saturating_sub(k0) + 1);
    let mut j = 0;
    for k in k0..=k1 {
        let t = k as f64 * TICK_SECONDS;
        while j + 1 < raw.len() && raw[j + 1].t <= t + GRID_EPS {
            j += 1;
        }
        let s = &raw[j];
        let q = s.orientation;
        out.push(KinematicSample {
            timestamp: Timestamp::from_tick(k),
            position: s.position,
            orientation: UnitQuaternion::normalize(q.w(), q.x(), q.y(), q.z())?,
            step_frequency: s.step_frequency,
            joint_angles: s.joint_angles,
        });
    }
    Ok(out)
}

/// Attaches grid velocities and the sway area. Ticks before the first full
/// sway window take the first full-window value.
pub fn assemble_states(samples: &[KinematicSample], sway: SwayConfig) -> Result<Vec<StateVector>> {
    if samples.len() < sway.window_len {
        return Err(Error::InsufficientData {
            needed: sway.window_len,
            got: samples.len(),
        });
    }
    let mut tracker = SwayTracker::new(sway)?;
    let mut areas = Vec::with_capacity(samples.len());
    for s in samples {
        let sample = tracker.push(&GroundProjection {
            timestamp: s.timestamp,
            point: project_torso_vertical(&s.orientation),
        })?;
        areas.push(sample.map(|x| x.sigma_z));
    }
    let first_full = areas[sway.window_len - 1].expect("window is full");
    let velocities = finite_difference_velocities(samples, sway.tick_seconds);
    Ok(samples
        .iter()
        .zip(velocities)
        .zip(areas)
        .map(|((s, (lin, ang)), area)| StateVector {
            timestamp: s.timestamp,
            position: s.position,
            orientation: s.orientation,
            linear_velocity: lin,
            angular_velocity: ang,
            sway_area: area.unwrap_or(first_full),
            step_frequency: s.step_frequency,
            joint_angles: s.joint_angles,
        })
        .collect())
}

/// A 20 Hz state series with one panorama per tick.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub id: String,
    pub scenario: Scenario,
    pub states: Vec<StateVector>,
    pub panoramas: Vec<Arc<DepthPanorama>>,
}

impl Trajectory {
    pub fn new(id: impl Into<String>, scenario: Scenario, states: Vec<StateVector>, panoramas: Vec<Arc<DepthPanorama>>) -> Result<Self> {
        if states.len() != panoramas.len() {
            return Err(Error::Shape(format!(
                "{} states but {} panoramas",
                states.len(),
                panoramas.len()
            )));
        }
        for (i, s) in states.iter().enumerate() {
            let expected = Timestamp::from_tick(i).secs() + states[0].timestamp.secs();
            if (s.timestamp.secs() - expected).abs() > 1e-6 {
                return Err(Error::InvalidInput(format!(
                    "tick {i} at t={} breaks the 0.05 s grid",
                    s.timestamp
                )));
            }
        }
        Ok(Self {
            id: id.into(),
            scenario,
            states,
            panoramas,
        })
    }

    /// Trajectory whose every panorama is the empty grid.
    pub fn without_scene(id: impl Into<String>, scenario: Scenario, states: Vec<StateVector>) -> Result<Self> {
        let empty = Arc::new(DepthPanorama::empty(Pose::identity()));
        let panoramas = vec![empty; states.len()];
        Self::new(id, scenario, states, panoramas)
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn planar_path(&self) -> Vec<Vector2<f64>> {
        self.states.iter().map(|s| s.position.xy()).collect()
    }
}

/// Builds per-tick panoramas from the trial's clouds. Each tick sees the
/// latest `queue_capacity` clouds, as a FIFO cloud queue would hold them.
pub fn trajectory_from_trial(id: impl Into<String>, trial: &SimTrial, queue_capacity: usize) -> Result<Trajectory> {
    if queue_capacity == 0 {
        return Err(Error::InvalidInput("queue capacity must be at least 1".into()));
    }
    if trial.clouds.len() != trial.states.len() {
        return Err(Error::Shape(format!(
            "{} clouds for {} states",
            trial.clouds.len(),
            trial.states.len()
        )));
    }
    let empty = Arc::new(DepthPanorama::empty(Pose::identity()));
    let panoramas = (0..trial.states.len())
        .into_par_iter()
        .map(|i| {
            let from = (i + 1).saturating_sub(queue_capacity);
            let clouds = &trial.clouds[from..=i];
            let s = &trial.states[i];
            let torso = Pose::new(s.timestamp, s.position, s.orientation);
            if clouds.iter().all(|c| c.is_empty()) {
                return empty.clone();
            }
            Arc::new(rasterize_clouds(clouds, &torso))
        })
        .collect();
    Trajectory::new(id, trial.scene_label, trial.states.clone(), panoramas)
}

/// A 200-tick slice split into 150 input and 50 label ticks.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceWindow {
    pub source_id: String,
    pub scenario: Scenario,
    pub start_tick: usize,
    pub input_states: Vec<StateVector>,
    pub input_panoramas: Vec<Arc<DepthPanorama>>,
    pub label_states: Vec<StateVector>,
    pub label_panoramas: Vec<Arc<DepthPanorama>>,
}

impl SequenceWindow {
    pub fn states(&self) -> impl Iterator<Item = &StateVector> {
        self.input_states.iter().chain(&self.label_states)
    }

    pub fn panoramas(&self) -> impl Iterator<Item = &Arc<DepthPanorama>> {
        self.input_panoramas.iter().chain(&self.label_panoramas)
    }

    pub fn planar_path(&self) -> Vec<Vector2<f64>> {
        self.states().map(|s| s.position.xy()).collect()
    }
}

/// Input/label split of a training window, in ticks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowSpec {
    pub input_ticks: usize,
    pub label_ticks: usize,
}

impl Default for WindowSpec {
    fn default() -> Self {
        Self {
            input_ticks: INPUT_TICKS,
            label_ticks: LABEL_TICKS,
        }
    }
}

impl WindowSpec {
    pub fn total(&self) -> usize {
        self.input_ticks + self.label_ticks
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_ticks == 0 || self.label_ticks == 0 {
            return Err(Error::InvalidInput(format!(
                "window split {}+{} needs at least one input and one label tick",
                self.input_ticks, self.label_ticks
            )));
        }
        Ok(())
    }

    /// Number of windows a trajectory of `n` ticks yields.
    pub fn count(&self, n: usize, stride: usize) -> usize {
        if n < self.total() || stride == 0 {
            0
        } else {
            (n - self.total()) / stride + 1
        }
    }
}

/// Number of 150+50 windows a trajectory of `n` ticks yields.
pub fn window_count(n: usize, stride: usize) -> usize {
    WindowSpec::default().count(n, stride)
}

/// 150+50 windows at offsets `0, stride, 2 * stride, ...`.
pub fn window_sequences(traj: &Trajectory, stride: usize) -> Result<Vec<SequenceWindow>> {
    window_sequences_with(traj, WindowSpec::default(), stride)
}

pub fn window_sequences_with(traj: &Trajectory, spec: WindowSpec, stride: usize) -> Result<Vec<SequenceWindow>> {
    spec.validate()?;
    if stride == 0 {
        return Err(Error::InvalidInput("stride must be at least 1 tick".into()));
    }
    Ok((0..spec.count(traj.len(), stride))
        .map(|w| {
            let start = w * stride;
            let mid = start + spec.input_ticks;
            let end = start + spec.total();
            SequenceWindow {
                source_id: traj.id.clone(),
                scenario: traj.scenario,
                start_tick: start,
                input_states: traj.states[start..mid].to_vec(),
                input_panoramas: traj.panoramas[start..mid].to_vec(),
                label_states: traj.states[mid..end].to_vec(),
                label_panoramas: traj.panoramas[mid..end].to_vec(),
            }
        })
        .collect())
}

/// Tightest turning radius along a 20 Hz planar path. The path is smoothed
/// with a 21-tap moving average first; straight paths give infinity.
pub fn min_turning_radius(positions: &[Vector2<f64>]) -> Result<f64> {
    if positions.len() < SMOOTHING_TAPS + 2 {
        return Err(Error::InsufficientData {
            needed: SMOOTHING_TAPS + 2,
            got: positions.len(),
        });
    }
    let smoothed: Vec<Vector2<f64>> = positions
        .windows(SMOOTHING_TAPS)
        .map(|w| w.iter().sum::<Vector2<f64>>() / SMOOTHING_TAPS as f64)
        .collect();
    let dt = TICK_SECONDS;
    let mut max_kappa: f64 = 0.0;
    for w in smoothed.windows(3) {
        let v = (w[2] - w[0]) / (2.0 * dt);
        let a = (w[2] - 2.0 * w[1] + w[0]) / (dt * dt);
        let speed = v.norm();
        if speed < 1e-9 {
            continue;
        }
        let kappa = (v.x * a.y - v.y * a.x).abs() / speed.powi(3);
        max_kappa = max_kappa.max(kappa);
    }
    Ok(if max_kappa < CURVATURE_FLOOR {
        f64::INFINITY
    } else {
        1.0 / max_kappa
    })
}

/// Keeps windows whose path turns tighter than `max_radius` somewhere.
pub fn curvature_filter(windows: Vec<SequenceWindow>, max_radius: f64) -> Result<Vec<SequenceWindow>> {
    let keep = windows
        .par_iter()
        .map(|w| min_turning_radius(&w.planar_path()).map(|r| r < max_radius))
        .collect::<Result<Vec<bool>>>()?;
    Ok(windows.into_iter().zip(keep).filter_map(|(w, k)| k.then_some(w)).collect())
}
