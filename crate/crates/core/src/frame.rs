//! Rotations, poses and point clouds in the start frame.
//!
//! The start frame is +X forward, +Y left, +Z up (against gravity). A pose's
//! orientation rotates torso-frame vectors into the start frame.

use std::ops::Mul;

use nalgebra::{Quaternion, Unit, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::Timestamp;

/// Unit quaternion with the double cover resolved to `w >= 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 4]", into = "[f64; 4]")]
pub struct UnitQuaternion(nalgebra::UnitQuaternion<f64>);

impl UnitQuaternion {
    /// Largest accepted deviation of `|q|` from 1 for raw input. Accepted
    /// quaternions are renormalized, so stored values are unit to machine
    /// precision.
    pub const NORM_TOLERANCE: f64 = 1e-6;

    pub fn identity() -> Self {
        Self(nalgebra::UnitQuaternion::identity())
    }

    /// Validates a quaternion that should already be unit-norm.
    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || (norm - 1.0).abs() > Self::NORM_TOLERANCE {
            return Err(Error::InvalidInput(format!(
                "quaternion ({w}, {x}, {y}, {z}) has norm {norm}, expected 1"
            )));
        }
        Ok(Self::canonical(Unit::new_normalize(q)))
    }

    /// Normalizes an arbitrary non-zero quaternion.
    pub fn normalize(w: f64, x: f64, y: f64, z: f64) -> Result<Self> {
        let q = Quaternion::new(w, x, y, z);
        let norm = q.norm();
        if !norm.is_finite() || norm < 1e-12 {
            return Err(Error::InvalidInput(format!(
                "quaternion ({w}, {x}, {y}, {z}) cannot be normalized"
            )));
        }
        Ok(Self::canonical(Unit::new_normalize(q)))
    }

    pub fn from_axis_angle(axis: Vector3<f64>, angle: f64) -> Self {
        match Unit::try_new(axis, 1e-15) {
            Some(axis) => Self::canonical(nalgebra::UnitQuaternion::from_axis_angle(&axis, angle)),
            None => Self::identity(),
        }
    }

    /// Rotation by `|v|` radians about `v`.
    pub fn from_rotation_vector(v: Vector3<f64>) -> Self {
        Self::canonical(nalgebra::UnitQuaternion::from_scaled_axis(v))
    }

    /// Rotation about +Z.
    pub fn from_yaw(yaw: f64) -> Self {
        Self::from_axis_angle(Vector3::z(), yaw)
    }

    fn canonical(q: nalgebra::UnitQuaternion<f64>) -> Self {
        let c = q.quaternion().coords; // (x, y, z, w)
        let flip = if c.w != 0.0 {
            c.w < 0.0
        } else {
            // w == 0: fall back to the first non-zero vector component.
            [c.x, c.y, c.z]
                .into_iter()
                .find(|v| *v != 0.0)
                .is_some_and(|v| v < 0.0)
        };
        if flip {
            Self(Unit::new_unchecked(-q.into_inner()))
        } else {
            Self(q)
        }
    }

    pub fn w(&self) -> f64 {
        self.0.w
    }
    pub fn x(&self) -> f64 {
        self.0.i
    }
    pub fn y(&self) -> f64 {
        self.0.j
    }
    pub fn z(&self) -> f64 {
        self.0.k
    }

    /// Components in `[w, x, y, z]` order.
    pub fn to_array(&self) -> [f64; 4] {
        [self.w(), self.x(), self.y(), self.z()]
    }

    pub fn inverse(&self) -> Self {
        Self::canonical(self.0.inverse())
    }

    pub fn rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.transform_vector(v)
    }

    pub fn inverse_rotate(&self, v: &Vector3<f64>) -> Vector3<f64> {
        self.0.inverse_transform_vector(v)
    }

    /// Rotation vector (axis times angle) of this rotation.
    pub fn rotation_vector(&self) -> Vector3<f64> {
        self.0.scaled_axis()
    }

    pub fn angle_to(&self, other: &Self) -> f64 {
        self.0.angle_to(&other.0)
    }

    pub fn as_nalgebra(&self) -> &nalgebra::UnitQuaternion<f64> {
        &self.0
    }
}

impl Default for UnitQuaternion {
    fn default() -> Self {
        Self::identity()
    }
}

impl Mul for UnitQuaternion {
    type Output = UnitQuaternion;

    /// `a * b` applies `b` first, then `a`.
    fn mul(self, rhs: Self) -> Self {
        Self::canonical(self.0 * rhs.0)
    }
}

impl TryFrom<[f64; 4]> for UnitQuaternion {
    type Error = Error;

    fn try_from(v: [f64; 4]) -> Result<Self> {
        Self::new(v[0], v[1], v[2], v[3])
    }
}

impl From<UnitQuaternion> for [f64; 4] {
    fn from(q: UnitQuaternion) -> Self {
        q.to_array()
    }
}

/// Returns `R(q) v`.
pub fn rotate_vector(q: &UnitQuaternion, v: &Vector3<f64>) -> Vector3<f64> {
    q.rotate(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub timestamp: Timestamp,
    pub position: Vector3<f64>,
    pub orientation: UnitQuaternion,
}

impl Pose {
    pub fn new(timestamp: Timestamp, position: Vector3<f64>, orientation: UnitQuaternion) -> Self {
        Self {
            timestamp,
            position,
            orientation,
        }
    }

    pub fn identity() -> Self {
        Self::new(Timestamp::ZERO, Vector3::zeros(), UnitQuaternion::identity())
    }

    /// The pose whose frame transform undoes this one.
    pub fn inverse(&self) -> Self {
        let orientation = self.orientation.inverse();
        Self {
            timestamp: self.timestamp,
            position: -orientation.rotate(&self.position),
            orientation,
        }
    }

    /// Expresses a start-frame point in this pose's local frame.
    pub fn to_local(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.inverse_rotate(&(p - self.position))
    }

    /// Maps a local-frame point into the start frame.
    pub fn to_world(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.orientation.rotate(p) + self.position
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointCloud {
    pub timestamp: Timestamp,
    pub points: Vec<Vector3<f64>>,
    /// Sensor pose at capture time.
    pub source_pose: Pose,
}

impl PointCloud {
    pub fn new(timestamp: Timestamp, points: Vec<Vector3<f64>>, source_pose: Pose) -> Result<Self> {
        if let Some(p) = points.iter().find(|p| !p.iter().all(|c| c.is_finite())) {
            return Err(Error::InvalidInput(format!("non-finite cloud point {p:?}")));
        }
        Ok(Self {
            timestamp,
            points,
            source_pose,
        })
    }

    pub fn empty(timestamp: Timestamp, source_pose: Pose) -> Self {
        Self {
            timestamp,
            points: Vec::new(),
            source_pose,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Re-expresses every point of `cloud` in the frame of `target`.
pub fn transform_to_frame(cloud: &PointCloud, target: &Pose) -> PointCloud {
    PointCloud {
        timestamp: cloud.timestamp,
        points: cloud.points.iter().map(|p| target.to_local(p)).collect(),
        source_pose: cloud.source_pose,
    }
}
