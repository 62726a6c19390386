//! Static scene geometry and a ray-cast depth sensor.
//!
//! Scenes are authored in the start frame with the ground at `z = 0`. Walls
//! are vertical rectangles standing on a 2D segment, boxes are axis-aligned,
//! and pillars are vertical cylinders.

use std::path::Path;

use nalgebra::{Vector2, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{PointCloud, Pose};
use crate::simgait::path::WalkPath;
use crate::simgait::SceneKind;

const EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Wall {
    pub a: [f64; 2],
    pub b: [f64; 2],
    #[serde(default = "default_wall_height")]
    pub height: f64,
}

fn default_wall_height() -> f64 {
    2.8
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pillar {
    pub center: [f64; 2],
    pub radius: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    #[serde(default)]
    pub walls: Vec<Wall>,
    #[serde(default)]
    pub boxes: Vec<Aabb>,
    #[serde(default)]
    pub pillars: Vec<Pillar>,
    /// Whether the ground plane returns hits.
    #[serde(default)]
    pub floor: bool,
}

impl Scene {
    pub fn is_empty(&self) -> bool {
        self.walls.is_empty() && self.boxes.is_empty() && self.pillars.is_empty() && !self.floor
    }

    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let scene: Scene = serde_json::from_str(&text)?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        for w in &self.walls {
            if !(w.height > 0.0) {
                return Err(Error::InvalidInput(format!("wall height {} must be positive", w.height)));
            }
        }
        for b in &self.boxes {
            if (0..3).any(|i| !(b.max[i] > b.min[i])) {
                return Err(Error::InvalidInput(format!("box {b:?} has an empty extent")));
            }
        }
        for p in &self.pillars {
            if !(p.radius > 0.0 && p.height > 0.0) {
                return Err(Error::InvalidInput(format!("pillar {p:?} has a non-positive size")));
            }
        }
        Ok(())
    }

    /// Straight corridor along +X with walls at `y = ±half_width`.
    pub fn corridor(length: f64, half_width: f64) -> Self {
        Self {
            walls: vec![
                Wall {
                    a: [-5.0, half_width],
                    b: [length, half_width],
                    height: default_wall_height(),
                },
                Wall {
                    a: [-5.0, -half_width],
                    b: [length, -half_width],
                    height: default_wall_height(),
                },
            ],
            boxes: vec![],
            pillars: vec![],
            floor: false,
        }
    }

    /// Procedural surroundings for a route, deterministic per seed.
    pub fn for_route(kind: SceneKind, path: &WalkPath, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5ce7e);
        let mut scene = Scene {
            floor: kind != SceneKind::Treadmill,
            ..Scene::default()
        };
        let stations = |spacing: f64| {
            let n = (path.length() / spacing).floor() as usize;
            (0..=n).map(move |i| i as f64 * spacing)
        };
        let side_point = |s: f64, offset: f64| -> Vector2<f64> {
            let t = path.tangent(s);
            path.at(s) + Vector2::new(-t.y, t.x) * offset
        };
        match kind {
            SceneKind::Treadmill => {}
            SceneKind::Indoor => {
                let half_width = 1.5;
                let ss: Vec<f64> = stations(1.0).chain([path.length()]).collect();
                for side in [-1.0, 1.0] {
                    for w in ss.windows(2) {
                        if w[1] - w[0] < 1e-6 {
                            continue;
                        }
                        let a = side_point(w[0], side * half_width);
                        let b = side_point(w[1], side * half_width);
                        scene.walls.push(Wall {
                            a: [a.x, a.y],
                            b: [b.x, b.y],
                            height: default_wall_height(),
                        });
                    }
                }
            }
            SceneKind::OutdoorCluttered => {
                for (i, s) in stations(2.0).enumerate().skip(1) {
                    let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let c = side_point(s, side * rng.random_range(1.2..3.0));
                    if rng.random_bool(0.5) {
                        let half = rng.random_range(0.25..0.5);
                        let h = rng.random_range(0.3..1.2);
                        scene.boxes.push(Aabb {
                            min: [c.x - half, c.y - half, 0.0],
                            max: [c.x + half, c.y + half, h],
                        });
                    } else {
                        scene.pillars.push(Pillar {
                            center: [c.x, c.y],
                            radius: rng.random_range(0.15..0.4),
                            height: rng.random_range(2.0..3.0),
                        });
                    }
                }
            }
            SceneKind::OutdoorFree => {
                for (i, s) in stations(8.0).enumerate() {
                    let side = if i % 2 == 0 { 1.0 } else { -1.0 };
                    let c = side_point(s, side * rng.random_range(5.0..9.0));
                    scene.pillars.push(Pillar {
                        center: [c.x, c.y],
                        radius: rng.random_range(0.2..0.5),
                        height: rng.random_range(3.0..6.0),
                    });
                }
            }
        }
        scene
    }

    /// Distance along the unit ray `dir` from `origin` to the nearest
    /// surface, if any is closer than `max_range`.
    pub fn raycast(&self, origin: &Vector3<f64>, dir: &Vector3<f64>, max_range: f64) -> Option<f64> {
        let mut best = max_range;
        let mut hit = false;
        let mut consider = |t: f64| {
            if t > EPS && t <= best {
                best = t;
                hit = true;
            }
        };
        if self.floor && dir.z < -EPS {
            consider(-origin.z / dir.z);
        }
        for w in &self.walls {
            if let Some(t) = ray_wall(origin, dir, w) {
                consider(t);
            }
        }
        for b in &self.boxes {
            if let Some(t) = ray_box(origin, dir, b) {
                consider(t);
            }
        }
        for p in &self.pillars {
            if let Some(t) = ray_pillar(origin, dir, p) {
                consider(t);
            }
        }
        hit.then_some(best)
    }
}

fn cross2(a: Vector2<f64>, b: Vector2<f64>) -> f64 {
    a.x * b.y - a.y * b.x
}

fn ray_wall(o: &Vector3<f64>, d: &Vector3<f64>, w: &Wall) -> Option<f64> {
    let (a, b) = (Vector2::from(w.a), Vector2::from(w.b));
    let (o2, d2) = (o.xy(), d.xy());
    let e = b - a;
    let denom = cross2(d2, e);
    if denom.abs() < EPS {
        return None;
    }
    let rel = a - o2;
    let t = cross2(rel, e) / denom;
    let u = cross2(rel, d2) / denom;
    if t <= EPS || !(0.0..=1.0).contains(&u) {
        return None;
    }
    let z = o.z + t * d.z;
    (0.0..=w.height).contains(&z).then_some(t)
}

fn ray_box(o: &Vector3<f64>, d: &Vector3<f64>, b: &Aabb) -> Option<f64> {
    let (mut t_near, mut t_far) = (f64::NEG_INFINITY, f64::INFINITY);
    for i in 0..3 {
        if d[i].abs() < EPS {
            if o[i] < b.min[i] || o[i] > b.max[i] {
                return None;
            }
            continue;
        }
        let (t1, t2) = ((b.min[i] - o[i]) / d[i], (b.max[i] - o[i]) / d[i]);
        t_near = t_near.max(t1.min(t2));
        t_far = t_far.min(t1.max(t2));
    }
    if t_near > t_far || t_far <= EPS {
        return None;
    }
    Some(if t_near > EPS { t_near } else { t_far })
}

fn ray_pillar(o: &Vector3<f64>, d: &Vector3<f64>, p: &Pillar) -> Option<f64> {
    let c = Vector2::from(p.center);
    let (o2, d2) = (o.xy() - c, d.xy());
    let mut best: Option<f64> = None;
    let mut take = |t: f64| {
        if t > EPS && best.is_none_or(|b| t < b) {
            best = Some(t);
        }
    };
    let qa = d2.norm_squared();
    if qa > EPS {
        let qb = 2.0 * o2.dot(&d2);
        let qc = o2.norm_squared() - p.radius * p.radius;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc >= 0.0 {
            let sq = disc.sqrt();
            for t in [(-qb - sq) / (2.0 * qa), (-qb + sq) / (2.0 * qa)] {
                let z = o.z + t * d.z;
                if (0.0..=p.height).contains(&z) {
                    take(t);
                }
            }
        }
    }
    if d.z.abs() > EPS {
        let t = (p.height - o.z) / d.z;
        if (o2 + d2 * t).norm() <= p.radius {
            take(t);
        }
    }
    best
}

/// Forward-facing depth camera mounted on the torso.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSensor {
    pub hfov_deg: f64,
    pub vfov_deg: f64,
    pub range: f64,
    /// Angular spacing of the simulated rays.
    pub step_deg: f64,
}

impl Default for DepthSensor {
    fn default() -> Self {
        Self {
            hfov_deg: 87.0,
            vfov_deg: 58.0,
            range: 10.0,
            step_deg: 1.5,
        }
    }
}

impl DepthSensor {
    /// Unit ray directions in the sensor (torso) frame.
    pub fn rays(&self) -> Vec<Vector3<f64>> {
        let axis = |fov: f64| -> Vec<f64> {
            let n = (fov / self.step_deg).floor() as usize;
            let start = -0.5 * n as f64 * self.step_deg;
            (0..=n).map(|i| (start + i as f64 * self.step_deg).to_radians()).collect()
        };
        let (azs, els) = (axis(self.hfov_deg), axis(self.vfov_deg));
        let mut out = Vec::with_capacity(azs.len() * els.len());
        for el in &els {
            for az in &azs {
                out.push(Vector3::new(el.cos() * az.cos(), el.cos() * az.sin(), el.sin()));
            }
        }
        out
    }

    /// Whether a torso-frame point lies inside the field of view and range.
    pub fn sees(&self, local: &Vector3<f64>) -> bool {
        let r = local.norm();
        if r == 0.0 || r > self.range + 1e-9 {
            return false;
        }
        let az = local.y.atan2(local.x).to_degrees();
        let el = (local.z / r).asin().to_degrees();
        az.abs() <= 0.5 * self.hfov_deg + 1e-6 && el.abs() <= 0.5 * self.vfov_deg + 1e-6
    }

    /// Casts every ray from `pose` and returns the hits in the start frame.
    pub fn capture(&self, scene: &Scene, pose: &Pose, rays: &[Vector3<f64>]) -> PointCloud {
        if scene.is_empty() {
            return PointCloud::empty(pose.timestamp, *pose);
        }
        let points = rays
            .iter()
            .filter_map(|local| {
                let dir = pose.orientation.rotate(local);
                scene
                    .raycast(&pose.position, &dir, self.range)
                    .map(|t| pose.position + dir * t)
            })
            .collect();
        PointCloud {
            timestamp: pose.timestamp,
            points,
            source_pose: *pose,
        }
    }
}
