//! Smooth walking paths through waypoints.
//!
//! A centripetal Catmull-Rom spline interpolates every waypoint, so the walker
//! passes through them exactly, and is resampled by arc length so it can be
//! traversed at constant speed.

use nalgebra::Vector2;

use crate::error::{Error, Result};

const SAMPLES_PER_SEGMENT: usize = 64;

#[derive(Debug, Clone)]
pub struct WalkPath {
    points: Vec<Vector2<f64>>,
    /// Cumulative arc length at each entry of `points`.
    arc: Vec<f64>,
}

fn catmull_rom(p0: Vector2<f64>, p1: Vector2<f64>, p2: Vector2<f64>, p3: Vector2<f64>, u: f64) -> Vector2<f64> {
    // Centripetal knots (alpha = 0.5) avoid cusps and self-intersections.
    let knot = |a: Vector2<f64>, b: Vector2<f64>| (b - a).norm().sqrt().max(1e-9);
    let t0 = 0.0;
    let t1 = t0 + knot(p0, p1);
    let t2 = t1 + knot(p1, p2);
    let t3 = t2 + knot(p2, p3);
    let t = t1 + u * (t2 - t1);
    let a1 = p0 * ((t1 - t) / (t1 - t0)) + p1 * ((t - t0) / (t1 - t0));
    let a2 = p1 * ((t2 - t) / (t2 - t1)) + p2 * ((t - t1) / (t2 - t1));
    let a3 = p2 * ((t3 - t) / (t3 - t2)) + p3 * ((t - t2) / (t3 - t2));
    let b1 = a1 * ((t2 - t) / (t2 - t0)) + a2 * ((t - t0) / (t2 - t0));
    let b2 = a2 * ((t3 - t) / (t3 - t1)) + a3 * ((t - t1) / (t3 - t1));
    b1 * ((t2 - t) / (t2 - t1)) + b2 * ((t - t1) / (t2 - t1))
}

impl WalkPath {
    pub fn through(waypoints: &[Vector2<f64>]) -> Result<Self> {
        if waypoints.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a walk needs at least 2 waypoints, got {}",
                waypoints.len()
            )));
        }
        if let Some(i) = waypoints.windows(2).position(|w| (w[1] - w[0]).norm() < 1e-6) {
            return Err(Error::InvalidInput(format!(
                "waypoints {i} and {} coincide at {:?}",
                i + 1,
                waypoints[i]
            )));
        }
        if waypoints.iter().any(|w| !w.x.is_finite() || !w.y.is_finite()) {
            return Err(Error::InvalidInput("non-finite waypoint".into()));
        }
        let n = waypoints.len();
        // Reflected phantom end points give natural end tangents.
        let first = waypoints[0] * 2.0 - waypoints[1];
        let last = waypoints[n - 1] * 2.0 - waypoints[n - 2];
        let at = |i: isize| -> Vector2<f64> {
            if i < 0 {
                first
            } else if i as usize >= n {
                last
            } else {
                waypoints[i as usize]
            }
        };
        let mut points = Vec::with_capacity((n - 1) * SAMPLES_PER_SEGMENT + 1);
        for seg in 0..n - 1 {
            let i = seg as isize;
            let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
            for k in 0..SAMPLES_PER_SEGMENT {
                points.push(catmull_rom(p0, p1, p2, p3, k as f64 / SAMPLES_PER_SEGMENT as f64));
            }
        }
        points.push(waypoints[n - 1]);
        let mut arc = Vec::with_capacity(points.len());
        let mut total = 0.0;
        arc.push(0.0);
        for w in points.windows(2) {
            total += (w[1] - w[0]).norm();
            arc.push(total);
        }
        Ok(Self { points, arc })
    }

    pub fn length(&self) -> f64 {
        *self.arc.last().expect("path has points")
    }

    /// Point at arc length `s`, clamped to the path ends.
    pub fn at(&self, s: f64) -> Vector2<f64> {
        let s = s.clamp(0.0, self.length());
        let i = self.arc.partition_point(|&a| a <= s).clamp(1, self.arc.len() - 1);
        let (a0, a1) = (self.arc[i - 1], self.arc[i]);
        let f = if a1 > a0 { (s - a0) / (a1 - a0) } else { 0.0 };
        self.points[i - 1] + (self.points[i] - self.points[i - 1]) * f
    }

    /// Unit tangent at arc length `s`.
    pub fn tangent(&self, s: f64) -> Vector2<f64> {
        let h = 0.05;
        let (a, b) = (
            (s - h).clamp(0.0, self.length()),
            (s + h).clamp(0.0, self.length()),
        );
        let d = self.at(b) - self.at(a);
        if d.norm() > 0.0 {
            d.normalize()
        } else {
            Vector2::x()
        }
    }

    /// Signed curvature at `s` (positive turning left), 1/m.
    pub fn curvature(&self, s: f64) -> f64 {
        let h = 0.25;
        let (a, b) = (
            (s - h).clamp(0.0, self.length()),
            (s + h).clamp(0.0, self.length()),
        );
        if b - a <= 0.0 {
            return 0.0;
        }
        let (ta, tb) = (self.tangent(a), self.tangent(b));
        let turn = (ta.x * tb.y - ta.y * tb.x).atan2(ta.dot(&tb));
        turn / (b - a)
    }

    /// Dense polyline approximation of the path.
    pub fn polyline(&self) -> &[Vector2<f64>] {
        &self.points
    }
}
