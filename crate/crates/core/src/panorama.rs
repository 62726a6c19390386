//! Egocentric depth panoramas.
//!
//! Point clouds collected along the walk are kept in a fixed-length queue and
//! rasterized into a 180x360 equirectangular depth grid in the current torso
//! frame, one degree per pixel. Row 0 is +90° elevation, column 0 is -180°
//! azimuth (directly behind, wrapping), and +Y (left) is +90° azimuth.
//! The nearest point wins each cell; untouched cells hold [`MAX_DEPTH`].

use std::collections::VecDeque;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;

use crate::error::{Error, Result};
use crate::frame::{PointCloud, Pose};

pub const ROWS: usize = 180;
pub const COLS: usize = 360;
pub const CELLS: usize = ROWS * COLS;
/// Meters. Also the value of empty cells.
pub const MAX_DEPTH: f32 = 10.0;
/// 2 s of clouds at 20 Hz.
pub const DEFAULT_QUEUE_CAPACITY: usize = 40;

const MAGIC: &[u8; 4] = b"PANO";
const HEADER_LEN: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Pixel {
    pub row: usize,
    pub col: usize,
}

impl Pixel {
    pub fn index(self) -> usize {
        self.row * COLS + self.col
    }

    /// Unit ray through the center of this cell, in the panorama frame.
    pub fn center_direction(self) -> Vector3<f64> {
        let azimuth = (self.col as f64 + 0.5 - 180.0).to_radians();
        let elevation = (90.0 - self.row as f64 - 0.5).to_radians();
        Vector3::new(
            elevation.cos() * azimuth.cos(),
            elevation.cos() * azimuth.sin(),
            elevation.sin(),
        )
    }
}

/// Bins a torso-frame point. Returns `None` at zero range or beyond
/// [`MAX_DEPTH`].
pub fn project_point_to_pixel(p: &Vector3<f64>) -> Option<(Pixel, f64)> {
    let depth = p.norm();
    if depth == 0.0 || !(depth <= MAX_DEPTH as f64) {
        return None;
    }
    let azimuth = p.y.atan2(p.x).to_degrees();
    let elevation = (p.z / depth).clamp(-1.0, 1.0).asin().to_degrees();
    let col = (azimuth + 180.0).floor().clamp(0.0, (COLS - 1) as f64) as usize;
    let row = (90.0 - elevation).floor().clamp(0.0, (ROWS - 1) as f64) as usize;
    Some((Pixel { row, col }, depth))
}

/// FIFO of clouds with oldest-first eviction.
#[derive(Debug, Clone)]
pub struct CloudQueue {
    capacity: usize,
    entries: VecDeque<PointCloud>,
}

impl CloudQueue {
    pub fn new(capacity: usize) -> Self {
        Self {
            capacity,
            entries: VecDeque::with_capacity(capacity),
        }
    }

    pub fn push(&mut self, cloud: PointCloud) {
        if self.capacity == 0 {
            return;
        }
        if self.entries.len() == self.capacity {
            self.entries.pop_front();
        }
        self.entries.push_back(cloud);
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &PointCloud> {
        self.entries.iter()
    }
}

impl Default for CloudQueue {
    fn default() -> Self {
        Self::new(DEFAULT_QUEUE_CAPACITY)
    }
}

/// Value-style push: returns the queue with `cloud` appended.
pub fn push_cloud(mut queue: CloudQueue, cloud: PointCloud) -> CloudQueue {
    queue.push(cloud);
    queue
}

#[derive(Debug, Clone, PartialEq)]
pub struct DepthPanorama {
    /// Row-major depths in meters, `ROWS * COLS` cells, each in (0, 10].
    pub grid: Vec<f32>,
    pub frame_pose: Pose,
}

impl DepthPanorama {
    pub fn empty(frame_pose: Pose) -> Self {
        Self {
            grid: vec![MAX_DEPTH; CELLS],
            frame_pose,
        }
    }

    pub fn from_grid(grid: Vec<f32>, frame_pose: Pose) -> Result<Self> {
        if grid.len() != CELLS {
            return Err(Error::Shape(format!("panorama has {} cells, expected {CELLS}", grid.len())));
        }
        Ok(Self { grid, frame_pose })
    }

    pub fn get(&self, row: usize, col: usize) -> f32 {
        self.grid[row * COLS + col]
    }

    /// Writes `depth` into the cell if it is nearer than what is there.
    fn splat(&mut self, pixel: Pixel, depth: f64) {
        let cell = &mut self.grid[pixel.index()];
        let depth = depth as f32;
        if depth < *cell {
            *cell = depth;
        }
    }

    /// Rasterizes points already expressed in this panorama's frame.
    pub fn splat_local_points<'a>(&mut self, points: impl IntoIterator<Item = &'a Vector3<f64>>) {
        for p in points {
            if let Some((pixel, depth)) = project_point_to_pixel(p) {
                self.splat(pixel, depth);
            }
        }
    }

    /// Cellwise minimum with another grid in the same frame.
    pub fn merge_min(&mut self, other: &DepthPanorama) {
        for (a, b) in self.grid.iter_mut().zip(&other.grid) {
            if *b < *a {
                *a = *b;
            }
        }
    }

    pub fn coverage(&self) -> f64 {
        panorama_coverage(self)
    }
}

/// Rasterizes every queued cloud into the frame of `torso`.
pub fn build_panorama(queue: &CloudQueue, torso: &Pose) -> DepthPanorama {
    rasterize_clouds(queue.iter(), torso)
}

/// Rasterizes any sequence of clouds into the frame of `torso`.
pub fn rasterize_clouds<'a>(clouds: impl IntoIterator<Item = &'a PointCloud>, torso: &Pose) -> DepthPanorama {
    let mut pano = DepthPanorama::empty(*torso);
    for cloud in clouds {
        for p in &cloud.points {
            if let Some((pixel, depth)) = project_point_to_pixel(&torso.to_local(p)) {
                pano.splat(pixel, depth);
            }
        }
    }
    pano
}

/// Fraction of cells nearer than the empty sentinel.
pub fn panorama_coverage(pano: &DepthPanorama) -> f64 {
    pano.grid.iter().filter(|&&d| d < MAX_DEPTH).count() as f64 / CELLS as f64
}

/// Writes the binary panorama format: a 16-byte header (`PANO`, u16 rows,
/// u16 cols, two reserved u32) and the grid as little-endian f32, row-major.
pub fn write_panorama(path: &Path, pano: &DepthPanorama) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    write_panorama_to(&mut w, pano).map_err(|e| Error::io(path, e))?;
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn write_panorama_to(w: &mut impl Write, pano: &DepthPanorama) -> std::io::Result<()> {
    let mut header = [0u8; HEADER_LEN];
    header[..4].copy_from_slice(MAGIC);
    header[4..6].copy_from_slice(&(ROWS as u16).to_le_bytes());
    header[6..8].copy_from_slice(&(COLS as u16).to_le_bytes());
    w.write_all(&header)?;
    let bytes: Vec<u8> = pano.grid.iter().flat_map(|v| v.to_le_bytes()).collect();
    w.write_all(&bytes)
}

/// Reads a panorama file. The file carries no pose, so the result is
/// expressed in an identity frame.
pub fn read_panorama(path: &Path) -> Result<DepthPanorama> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut bytes = Vec::new();
    BufReader::new(file)
        .read_to_end(&mut bytes)
        .map_err(|e| Error::io(path, e))?;
    decode_panorama(&bytes)
}

pub fn decode_panorama(bytes: &[u8]) -> Result<DepthPanorama> {
    if bytes.len() < HEADER_LEN || &bytes[..4] != MAGIC {
        return Err(Error::Schema("missing PANO header".into()));
    }
    let rows = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let cols = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    if (rows, cols) != (ROWS, COLS) {
        return Err(Error::Shape(format!("panorama is {rows}x{cols}, expected {ROWS}x{COLS}")));
    }
    let body = &bytes[HEADER_LEN..];
    if body.len() != CELLS * 4 {
        return Err(Error::Shape(format!(
            "panorama body has {} bytes, expected {}",
            body.len(),
            CELLS * 4
        )));
    }
    let grid = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    DepthPanorama::from_grid(grid, Pose::identity())
}

/// Binary PGM (P5) with depth mapped linearly from [0, 10] m to [0, 255].
pub fn write_pgm(path: &Path, pano: &DepthPanorama) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let pixels: Vec<u8> = pano
        .grid
        .iter()
        .map(|d| (d / MAX_DEPTH * 255.0).round().clamp(0.0, 255.0) as u8)
        .collect();
    write!(w, "P5\n{COLS} {ROWS}\n255\n")
        .and_then(|_| w.write_all(&pixels))
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}
