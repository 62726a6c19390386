//! Human-readable state CSVs, simulated trial directories and split files.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{PointCloud, Pose, UnitQuaternion};
use crate::simgait::{PerturbationSpec, SceneKind, SimTrial};
use crate::state::{StateVector, Timestamp, CHANNEL_NAMES, STATE_DIM};

pub const TRIAL_STATES: &str = "states.csv";
pub const TRIAL_TRUTH: &str = "truth.json";
pub const TRIAL_CLOUDS: &str = "clouds.bin";
const CLOUD_MAGIC: &[u8; 4] = b"CLDS";
const CLOUD_VERSION: u32 = 1;

/// One row per tick: `t` followed by the 24 named channels.
pub fn write_states_csv(path: &Path, states: &[StateVector]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    let mut header = vec!["t"];
    header.extend(CHANNEL_NAMES);
    w.write_record(&header)?;
    for s in states {
        let mut row = vec![s.timestamp.secs().to_string()];
        row.extend(s.to_array().iter().map(f64::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a state CSV. Columns are matched by name, so their order is free.
pub fn read_states_csv(path: &Path) -> Result<Vec<StateVector>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = csv::Reader::from_reader(BufReader::new(file));
    let headers = r.headers()?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("{}: missing column {name:?}", path.display())))
    };
    let t_col = column("t")?;
    let cols: Vec<usize> = CHANNEL_NAMES.iter().map(|n| column(n)).collect::<Result<_>>()?;
    let mut out = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record?;
        let parse = |i: usize| -> Result<f64> {
            record[i].trim().parse::<f64>().map_err(|e| {
                Error::Schema(format!("{} row {}: {:?}: {e}", path.display(), line + 1, &record[i]))
            })
        };
        let mut values = [0.0; STATE_DIM];
        for (v, &c) in values.iter_mut().zip(&cols) {
            *v = parse(c)?;
        }
        out.push(StateVector::from_array(Timestamp::new(parse(t_col)?)?, &values)?);
    }
    Ok(out)
}

fn write_pose(buf: &mut Vec<u8>, pose: &Pose) {
    buf.extend_from_slice(&pose.timestamp.secs().to_le_bytes());
    for v in pose.position.iter() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    for v in pose.orientation.to_array() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
}

/// Binary cloud stream: `CLDS`, u32 version, u64 count, then per cloud an
/// f64 timestamp, the source pose (f64 t, xyz, wxyz), a u32 point count and
/// the points as f32 triples. All little-endian.
pub fn write_clouds(path: &Path, clouds: &[PointCloud]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut buf = Vec::new();
    buf.extend_from_slice(CLOUD_MAGIC);
    buf.extend_from_slice(&CLOUD_VERSION.to_le_bytes());
    buf.extend_from_slice(&(clouds.len() as u64).to_le_bytes());
    for c in clouds {
        buf.extend_from_slice(&c.timestamp.secs().to_le_bytes());
        write_pose(&mut buf, &c.source_pose);
        buf.extend_from_slice(&(c.points.len() as u32).to_le_bytes());
        for p in &c.points {
            for v in p.iter() {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
        }
        w.write_all(&buf).map_err(|e| Error::io(path, e))?;
        buf.clear();
    }
    w.flush().map_err(|e| Error::io(path, e))
}

struct Cursor<'a> {
    bytes: &'a [u8],
    at: usize,
}

impl Cursor<'_> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N]> {
        let end = self.at + N;
        let slice = self
            .bytes
            .get(self.at..end)
            .ok_or_else(|| Error::Shape(format!("cloud file truncated at byte {}", self.at)))?;
        self.at = end;
        Ok(slice.try_into().expect("length checked"))
    }

    fn f64(&mut self) -> Result<f64> {
        self.take::<8>().map(f64::from_le_bytes)
    }

    fn f32(&mut self) -> Result<f32> {
        self.take::<4>().map(f32::from_le_bytes)
    }

    fn u32(&mut self) -> Result<u32> {
        self.take::<4>().map(u32::from_le_bytes)
    }

    fn pose(&mut self) -> Result<Pose> {
        let t = Timestamp::new(self.f64()?)?;
        let position = Vector3::new(self.f64()?, self.f64()?, self.f64()?);
        let q = [self.f64()?, self.f64()?, self.f64()?, self.f64()?];
        Ok(Pose::new(t, position, UnitQuaternion::new(q[0], q[1], q[2], q[3])?))
    }
}

pub fn read_clouds(path: &Path) -> Result<Vec<PointCloud>> {
    let mut bytes = Vec::new();
    File::open(path)
        .and_then(|f| BufReader::new(f).read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    let mut cur = Cursor { bytes: &bytes, at: 0 };
    if &cur.take::<4>()? != CLOUD_MAGIC {
        return Err(Error::Schema(format!("{}: not a cloud file", path.display())));
    }
    let version = cur.u32()?;
    if version != CLOUD_VERSION {
        return Err(Error::Schema(format!("{}: cloud format version {version}", path.display())));
    }
    let count = u64::from_le_bytes(cur.take::<8>()?) as usize;
    let mut clouds = Vec::with_capacity(count.min(1 << 20));
    for _ in 0..count {
        let timestamp = Timestamp::new(cur.f64()?)?;
        let source_pose = cur.pose()?;
        let n = cur.u32()? as usize;
        let mut points = Vec::with_capacity(n.min(1 << 24));
        for _ in 0..n {
            points.push(Vector3::new(cur.f32()? as f64, cur.f32()? as f64, cur.f32()? as f64));
        }
        clouds.push(PointCloud::new(timestamp, points, source_pose)?);
    }
    if cur.at != bytes.len() {
        return Err(Error::Shape(format!(
            "{}: {} trailing bytes",
            path.display(),
            bytes.len() - cur.at
        )));
    }
    Ok(clouds)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialTruth {
    pub scene: SceneKind,
    pub perturbations: Vec<PerturbationSpec>,
}

/// Writes `states.csv`, `truth.json` and `clouds.bin` into `dir`.
pub fn write_trial(dir: &Path, trial: &SimTrial) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    write_states_csv(&dir.join(TRIAL_STATES), &trial.states)?;
    let truth = TrialTruth {
        scene: trial.scene_label,
        perturbations: trial.truth.clone(),
    };
    let path = dir.join(TRIAL_TRUTH);
    fs::write(&path, serde_json::to_string_pretty(&truth)? + "\n").map_err(|e| Error::io(&path, e))?;
    write_clouds(&dir.join(TRIAL_CLOUDS), &trial.clouds)
}

/// Reads a trial directory. A missing `clouds.bin` yields empty clouds at
/// the state poses.
pub fn read_trial(dir: &Path) -> Result<SimTrial> {
    let states = read_states_csv(&dir.join(TRIAL_STATES))?;
    let path = dir.join(TRIAL_TRUTH);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let truth: TrialTruth = serde_json::from_str(&text)?;
    let clouds_path = dir.join(TRIAL_CLOUDS);
    let clouds = if clouds_path.exists() {
        read_clouds(&clouds_path)?
    } else {
        states
            .iter()
            .map(|s| PointCloud::empty(s.timestamp, Pose::new(s.timestamp, s.position, s.orientation)))
            .collect()
    };
    if clouds.len() != states.len() {
        return Err(Error::Shape(format!(
            "{}: {} clouds for {} states",
            dir.display(),
            clouds.len(),
            states.len()
        )));
    }
    Ok(SimTrial {
        states,
        clouds,
        truth: truth.perturbations,
        scene_label: truth.scene,
    })
}

/// Trajectory ids assigned to each side of a train/test split.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    #[serde(default)]
    pub train: Vec<String>,
    #[serde(default)]
    pub test: Vec<String>,
}

impl Split {
    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let split: Split = serde_json::from_str(&text)?;
        if let Some(id) = split.train.iter().find(|id| split.test.contains(id)) {
            return Err(Error::Schema(format!("{id:?} is in both train and test")));
        }
        Ok(split)
    }

    pub fn ids(&self, subset: Subset) -> &[String] {
        match subset {
            Subset::Train => &self.train,
            Subset::Test => &self.test,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Subset {
    Train,
    Test,
}
