use std::fmt;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::UnitQuaternion;

/// Tick spacing of every resampled stream, in seconds (20 Hz).
pub const TICK_SECONDS: f64 = 0.05;

/// Number of numeric channels in a [`StateVector`], excluding the timestamp.
pub const STATE_DIM: usize = 24;

pub const JOINT_COUNT: usize = 9;

/// Seconds since trajectory start.
#[derive(Debug, Clone, Copy, Default, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Timestamp(f64);

impl Timestamp {
    pub const ZERO: Timestamp = Timestamp(0.0);

    pub fn new(secs: f64) -> Result<Self> {
        if secs.is_finite() && secs >= 0.0 {
            Ok(Self(secs))
        } else {
            Err(Error::InvalidInput(format!("timestamp {secs} must be finite and non-negative")))
        }
    }

    /// Unchecked constructor for values known to be valid.
    pub const fn from_secs(secs: f64) -> Self {
        Self(secs)
    }

    pub fn from_tick(tick: usize) -> Self {
        Self(tick as f64 * TICK_SECONDS)
    }

    pub fn secs(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}s", self.0)
    }
}

/// Joint channel names, in storage order.
pub const JOINT_NAMES: [&str; JOINT_COUNT] = [
    "hip_flexion_l",
    "hip_flexion_r",
    "hip_abduction_l",
    "hip_abduction_r",
    "hip_rotation_l",
    "hip_rotation_r",
    "knee_flexion_l",
    "knee_flexion_r",
    "thigh_roll_diff",
];

/// Column names of the flattened state vector, in storage order.
pub const CHANNEL_NAMES: [&str; STATE_DIM] = [
    "pos_x",
    "pos_y",
    "pos_z",
    "quat_w",
    "quat_x",
    "quat_y",
    "quat_z",
    "vel_x",
    "vel_y",
    "vel_z",
    "ang_vel_x",
    "ang_vel_y",
    "ang_vel_z",
    "sway_area",
    "step_frequency",
    "hip_flexion_l",
    "hip_flexion_r",
    "hip_abduction_l",
    "hip_abduction_r",
    "hip_rotation_l",
    "hip_rotation_r",
    "knee_flexion_l",
    "knee_flexion_r",
    "thigh_roll_diff",
];

/// Per-tick user state: pose, velocities, sway area, cadence and joint angles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    pub timestamp: Timestamp,
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion,
    pub linear_velocity: Vector3<f64>,
    /// Body-frame angular rate, rad/s.
    pub angular_velocity: Vector3<f64>,
    pub sway_area: f64,
    /// Hz.
    pub step_frequency: f64,
    /// Radians.
    pub joint_angles: [f64; JOINT_COUNT],
}

impl StateVector {
    pub fn to_array(&self) -> [f64; STATE_DIM] {
        let mut out = [0.0; STATE_DIM];
        out[0..3].copy_from_slice(self.position.as_slice());
        out[3..7].copy_from_slice(&self.orientation.to_array());
        out[7..10].copy_from_slice(self.linear_velocity.as_slice());
        out[10..13].copy_from_slice(self.angular_velocity.as_slice());
        out[13] = self.sway_area;
        out[14] = self.step_frequency;
        out[15..24].copy_from_slice(&self.joint_angles);
        out
    }

    /// Rebuilds a state from its flattened channels. The quaternion is
    /// renormalized, since stored channels may have been rounded to f32.
    pub fn from_array(timestamp: Timestamp, v: &[f64; STATE_DIM]) -> Result<Self> {
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(Error::InvalidInput(format!("channel {} is not finite", CHANNEL_NAMES[i])));
        }
        let orientation = UnitQuaternion::normalize(v[3], v[4], v[5], v[6])?;
        let state = Self {
            timestamp,
            position: Vector3::new(v[0], v[1], v[2]),
            orientation,
            linear_velocity: Vector3::new(v[7], v[8], v[9]),
            angular_velocity: Vector3::new(v[10], v[11], v[12]),
            sway_area: v[13],
            step_frequency: v[14],
            joint_angles: v[15..24].try_into().expect("nine joint channels"),
        };
        state.validate()?;
        Ok(state)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.sway_area >= 0.0) {
            return Err(Error::InvalidInput(format!("sway area {} must be >= 0", self.sway_area)));
        }
        if !(self.step_frequency >= 0.0) {
            return Err(Error::InvalidInput(format!(
                "step frequency {} must be >= 0",
                self.step_frequency
            )));
        }
        Ok(())
    }
}

/// Grid-aligned sample before velocities are attached.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KinematicSample {
    pub timestamp: Timestamp,
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion,
    pub step_frequency: f64,
    pub joint_angles: [f64; JOINT_COUNT],
}

/// Linear and body-frame angular velocities by central differences over the
/// tick grid; the two end ticks use one-sided differences.
pub fn finite_difference_velocities(samples: &[KinematicSample], dt: f64) -> Vec<(Vector3<f64>, Vector3<f64>)> {
    let n = samples.len();
    if n < 2 {
        return vec![(Vector3::zeros(), Vector3::zeros()); n];
    }
    (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            let span = (b - a) as f64 * dt;
            let lin = (samples[b].position - samples[a].position) / span;
            let rel = samples[a].orientation.inverse() * samples[b].orientation;
            (lin, rel.rotation_vector() / span)
        })
        .collect()
}
