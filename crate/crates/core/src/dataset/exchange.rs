//! Exchange directories shared with the predictor.
//!
//! A directory holds `manifest.json`, `states.bin` (little-endian f32 in
//! `[window, tick, channel]` order) and, optionally, `panos.bin` (f32 in
//! `[window, tick, row, col]` order). Training sets carry all 200 ticks of
//! each window; prediction sets carry the 50 label ticks only.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Scenario, SequenceWindow, WindowSpec};
use crate::error::{Error, Result};
use crate::panorama::{COLS, ROWS};
use crate::state::{StateVector, Timestamp, CHANNEL_NAMES, STATE_DIM, TICK_SECONDS};

pub const SCHEMA_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const STATES_FILE: &str = "states.bin";
pub const PANOS_FILE: &str = "panos.bin";
const PANO_CELLS: usize = ROWS * COLS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SetKind {
    TrainingSet,
    Predictions,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowMeta {
    pub source_id: String,
    pub scenario: Scenario,
    pub start_tick: usize,
    /// Time of the first input tick, seconds.
    pub start_time: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema_version: u32,
    pub kind: SetKind,
    /// Model variant that produced a prediction set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variant: Option<String>,
    pub channels: Vec<String>,
    pub tick_seconds: f64,
    pub input_ticks: usize,
    pub label_ticks: usize,
    /// Ticks stored per window.
    pub ticks_per_window: usize,
    pub pano_rows: usize,
    pub pano_cols: usize,
    pub has_panoramas: bool,
    pub windows: Vec<WindowMeta>,
}

impl Manifest {
    fn new(kind: SetKind, variant: Option<String>, has_panoramas: bool, spec: WindowSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            kind,
            variant,
            channels: CHANNEL_NAMES.iter().map(|s| s.to_string()).collect(),
            tick_seconds: TICK_SECONDS,
            input_ticks: spec.input_ticks,
            label_ticks: spec.label_ticks,
            ticks_per_window: match kind {
                SetKind::TrainingSet => spec.total(),
                SetKind::Predictions => spec.label_ticks,
            },
            pano_rows: ROWS,
            pano_cols: COLS,
            has_panoramas,
            windows: vec![],
        }
    }

    pub fn n_windows(&self) -> usize {
        self.windows.len()
    }

    pub fn window_spec(&self) -> WindowSpec {
        WindowSpec {
            input_ticks: self.input_ticks,
            label_ticks: self.label_ticks,
        }
    }

    /// Position of each canonical channel in the stored order.
    fn channel_map(&self) -> Result<[usize; STATE_DIM]> {
        if self.channels.len() != STATE_DIM {
            return Err(Error::Schema(format!(
                "manifest lists {} channels, expected {STATE_DIM}",
                self.channels.len()
            )));
        }
        let mut map = [0usize; STATE_DIM];
        for (i, name) in CHANNEL_NAMES.iter().enumerate() {
            map[i] = self
                .channels
                .iter()
                .position(|c| c == name)
                .ok_or_else(|| Error::Schema(format!("manifest is missing channel {name:?}")))?;
        }
        Ok(map)
    }

    fn validate(&self, kind: SetKind) -> Result<()> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(Error::Schema(format!(
                "schema version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.kind != kind {
            return Err(Error::Schema(format!("expected a {kind:?} directory, found {:?}", self.kind)));
        }
        let expected_ticks = match kind {
            SetKind::TrainingSet => self.input_ticks + self.label_ticks,
            SetKind::Predictions => self.label_ticks,
        };
        if self.ticks_per_window != expected_ticks || self.label_ticks == 0 || self.input_ticks == 0 {
            return Err(Error::Shape(format!(
                "windows of {}+{} ticks storing {}",
                self.input_ticks, self.label_ticks, self.ticks_per_window
            )));
        }
        if (self.pano_rows, self.pano_cols) != (ROWS, COLS) {
            return Err(Error::Shape(format!(
                "panoramas are {}x{}, expected {ROWS}x{COLS}",
                self.pano_rows, self.pano_cols
            )));
        }
        if (self.tick_seconds - TICK_SECONDS).abs() > 1e-12 {
            return Err(Error::Schema(format!("tick spacing {} s, expected {TICK_SECONDS}", self.tick_seconds)));
        }
        self.channel_map().map(|_| ())
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |e| Error::io(path, e)
}

/// Streams windows into an exchange directory.
pub struct ExchangeWriter {
    dir: PathBuf,
    manifest: Manifest,
    states: BufWriter<File>,
    panos: Option<BufWriter<File>>,
}

impl ExchangeWriter {
    /// A writer for 150+50 windows.
    pub fn create(dir: &Path, kind: SetKind, variant: Option<String>, has_panoramas: bool) -> Result<Self> {
        Self::create_with(dir, kind, variant, has_panoramas, WindowSpec::default())
    }

    pub fn create_with(
        dir: &Path,
        kind: SetKind,
        variant: Option<String>,
        has_panoramas: bool,
        spec: WindowSpec,
    ) -> Result<Self> {
        spec.validate()?;
        fs::create_dir_all(dir).map_err(io_err(dir))?;
        let states_path = dir.join(STATES_FILE);
        let states = BufWriter::new(File::create(&states_path).map_err(io_err(&states_path))?);
        let panos_path = dir.join(PANOS_FILE);
        let panos = if has_panoramas {
            Some(BufWriter::new(File::create(&panos_path).map_err(io_err(&panos_path))?))
        } else {
            if panos_path.exists() {
                fs::remove_file(&panos_path).map_err(io_err(&panos_path))?;
            }
            None
        };
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest: Manifest::new(kind, variant, has_panoramas, spec),
            states,
            panos,
        })
    }

    /// Appends one window. `panoramas` is required exactly when the
    /// directory was created with panoramas.
    pub fn push<'a>(
        &mut self,
        meta: WindowMeta,
        states: &[[f32; STATE_DIM]],
        panoramas: Option<impl IntoIterator<Item = &'a [f32]>>,
    ) -> Result<()> {
        let ticks = self.manifest.ticks_per_window;
        if states.len() != ticks {
            return Err(Error::Shape(format!("window has {} state ticks, expected {ticks}", states.len())));
        }
        let states_path = self.dir.join(STATES_FILE);
        let mut buf = Vec::with_capacity(ticks * STATE_DIM * 4);
        for row in states {
            for v in row {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        self.states.write_all(&buf).map_err(io_err(&states_path))?;
        match (&mut self.panos, panoramas) {
            (Some(w), Some(panos)) => {
                let path = self.dir.join(PANOS_FILE);
                let mut count = 0;
                for grid in panos {
                    if grid.len() != PANO_CELLS {
                        return Err(Error::Shape(format!("panorama has {} cells, expected {PANO_CELLS}", grid.len())));
                    }
                    let bytes: Vec<u8> = grid.iter().flat_map(|v| v.to_le_bytes()).collect();
                    w.write_all(&bytes).map_err(io_err(&path))?;
                    count += 1;
                }
                if count != ticks {
                    return Err(Error::Shape(format!("window has {count} panoramas, expected {ticks}")));
                }
            }
            (None, None) => {}
            (Some(_), None) => return Err(Error::Shape("window is missing its panoramas".into())),
            (None, Some(_)) => return Err(Error::Shape("set was created without panoramas".into())),
        }
        self.manifest.windows.push(meta);
        Ok(())
    }

    pub fn finish(mut self) -> Result<Manifest> {
        let states_path = self.dir.join(STATES_FILE);
        self.states.flush().map_err(io_err(&states_path))?;
        if let Some(w) = &mut self.panos {
            let path = self.dir.join(PANOS_FILE);
            w.flush().map_err(io_err(&path))?;
        }
        let path = self.dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").map_err(io_err(&path))?;
        Ok(self.manifest)
    }
}

fn state_row(s: &StateVector) -> [f32; STATE_DIM] {
    s.to_array().map(|v| v as f32)
}

/// Writes windows as a training set. The split is taken from the first
/// window; every window must share it.
pub fn export_training_set(windows: &[SequenceWindow], dir: &Path, include_panoramas: bool) -> Result<Manifest> {
    let spec = windows.first().map_or_else(WindowSpec::default, |w| WindowSpec {
        input_ticks: w.input_states.len(),
        label_ticks: w.label_states.len(),
    });
    let mut w = ExchangeWriter::create_with(dir, SetKind::TrainingSet, None, include_panoramas, spec)?;
    for win in windows {
        let meta = WindowMeta {
            source_id: win.source_id.clone(),
            scenario: win.scenario,
            start_tick: win.start_tick,
            start_time: win.input_states[0].timestamp.secs(),
        };
        let states: Vec<[f32; STATE_DIM]> = win.states().map(state_row).collect();
        let panos = include_panoramas.then(|| win.panoramas().map(|p| p.grid.as_slice()));
        w.push(meta, &states, panos)?;
    }
    w.finish()
}

/// Writes predicted label ticks, one entry per window of the source set.
pub fn export_predictions(
    dir: &Path,
    variant: &str,
    windows: &[WindowMeta],
    states: &[Vec<StateVector>],
    panoramas: Option<&[Vec<Vec<f32>>]>,
) -> Result<Manifest> {
    if states.len() != windows.len() || panoramas.is_some_and(|p| p.len() != windows.len()) {
        return Err(Error::Shape(format!(
            "{} window entries but {} predicted windows",
            windows.len(),
            states.len()
        )));
    }
    let spec = WindowSpec {
        label_ticks: states.first().map_or(WindowSpec::default().label_ticks, Vec::len),
        ..WindowSpec::default()
    };
    let mut w = ExchangeWriter::create_with(dir, SetKind::Predictions, Some(variant.to_string()), panoramas.is_some(), spec)?;
    for (i, meta) in windows.iter().enumerate() {
        let rows: Vec<[f32; STATE_DIM]> = states[i].iter().map(state_row).collect();
        w.push(meta.clone(), &rows, panoramas.map(|p| p[i].iter().map(|g| g.as_slice())))?;
    }
    w.finish()
}

/// An imported exchange directory. States are held in memory in canonical
/// channel order; panoramas are read on demand.
#[derive(Debug, Clone)]
pub struct ExchangeSet {
    pub dir: PathBuf,
    pub manifest: Manifest,
    states: Vec<[f32; STATE_DIM]>,
}

/// One window's payload, as stored.
#[derive(Debug, Clone, PartialEq)]
pub struct ExchangeWindow {
    pub meta: WindowMeta,
    pub states: Vec<[f32; STATE_DIM]>,
    pub panoramas: Option<Vec<Vec<f32>>>,
}

pub fn import_training_set(dir: &Path) -> Result<ExchangeSet> {
    ExchangeSet::open(dir, SetKind::TrainingSet)
}

pub fn import_predictions(dir: &Path) -> Result<ExchangeSet> {
    ExchangeSet::open(dir, SetKind::Predictions)
}

fn read_f32s(bytes: &[u8]) -> impl Iterator<Item = f32> + '_ {
    bytes.chunks_exact(4).map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
}

impl ExchangeSet {
    pub fn open(dir: &Path, kind: SetKind) -> Result<Self> {
        let manifest_path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let manifest: Manifest = serde_json::from_str(&text)?;
        manifest.validate(kind)?;
        let map = manifest.channel_map()?;
        let ticks = manifest.ticks_per_window;
        let n = manifest.n_windows();

        let states_path = dir.join(STATES_FILE);
        let bytes = fs::read(&states_path).map_err(io_err(&states_path))?;
        let expected = n * ticks * STATE_DIM * 4;
        if bytes.len() != expected {
            return Err(Error::Shape(format!(
                "{} holds {} bytes, manifest implies {expected}",
                states_path.display(),
                bytes.len()
            )));
        }
        let raw: Vec<f32> = read_f32s(&bytes).collect();
        let mut states = Vec::with_capacity(n * ticks);
        for (i, row) in raw.chunks_exact(STATE_DIM).enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::NanPayload {
                    window: i / ticks,
                    tick: i % ticks,
                });
            }
            states.push(std::array::from_fn(|c| row[map[c]]));
        }

        if manifest.has_panoramas {
            Self::scan_panoramas(dir, n, ticks)?;
        }
        Ok(Self {
            dir: dir.to_path_buf(),
            manifest,
            states,
        })
    }

    fn scan_panoramas(dir: &Path, n: usize, ticks: usize) -> Result<()> {
        let path = dir.join(PANOS_FILE);
        let file = File::open(&path).map_err(io_err(&path))?;
        let expected = (n * ticks * PANO_CELLS * 4) as u64;
        let len = file.metadata().map_err(io_err(&path))?.len();
        if len != expected {
            return Err(Error::Shape(format!(
                "{} holds {len} bytes, manifest implies {expected}",
                path.display()
            )));
        }
        let mut reader = BufReader::new(file);
        let mut buf = vec![0u8; PANO_CELLS * 4];
        for i in 0..n * ticks {
            reader.read_exact(&mut buf).map_err(io_err(&path))?;
            if read_f32s(&buf).any(|v| !v.is_finite()) {
                return Err(Error::NanPayload {
                    window: i / ticks,
                    tick: i % ticks,
                });
            }
        }
        Ok(())
    }

    pub fn n_windows(&self) -> usize {
        self.manifest.n_windows()
    }

    pub fn ticks_per_window(&self) -> usize {
        self.manifest.ticks_per_window
    }

    pub fn meta(&self, window: usize) -> &WindowMeta {
        &self.manifest.windows[window]
    }

    pub fn window_states(&self, window: usize) -> &[[f32; STATE_DIM]] {
        let t = self.ticks_per_window();
        &self.states[window * t..(window + 1) * t]
    }

    /// The label ticks of a window, whichever kind of set this is.
    pub fn label_states(&self, window: usize) -> &[[f32; STATE_DIM]] {
        let s = self.window_states(window);
        &s[s.len() - self.manifest.label_ticks..]
    }

    /// Panoramas of ticks `from..to` of a window, if the set has any.
    fn read_panorama_range(&self, window: usize, from: usize, to: usize) -> Result<Option<Vec<Vec<f32>>>> {
        if !self.manifest.has_panoramas {
            return Ok(None);
        }
        let path = self.dir.join(PANOS_FILE);
        let mut file = File::open(&path).map_err(io_err(&path))?;
        let offset = ((window * self.ticks_per_window() + from) * PANO_CELLS * 4) as u64;
        file.seek(SeekFrom::Start(offset)).map_err(io_err(&path))?;
        let mut reader = BufReader::new(file);
        let mut buf = vec![0u8; PANO_CELLS * 4];
        let mut out = Vec::with_capacity(to - from);
        for _ in from..to {
            reader.read_exact(&mut buf).map_err(io_err(&path))?;
            out.push(read_f32s(&buf).collect());
        }
        Ok(Some(out))
    }

    pub fn window_panoramas(&self, window: usize) -> Result<Option<Vec<Vec<f32>>>> {
        self.read_panorama_range(window, 0, self.ticks_per_window())
    }

    pub fn label_panoramas(&self, window: usize) -> Result<Option<Vec<Vec<f32>>>> {
        let t = self.ticks_per_window();
        self.read_panorama_range(window, t - self.manifest.label_ticks, t)
    }

    pub fn window(&self, window: usize) -> Result<ExchangeWindow> {
        Ok(ExchangeWindow {
            meta: self.meta(window).clone(),
            states: self.window_states(window).to_vec(),
            panoramas: self.window_panoramas(window)?,
        })
    }

    /// Timestamped states of one stored window.
    pub fn state_vectors(&self, window: usize) -> Result<Vec<StateVector>> {
        let first_tick = match self.manifest.kind {
            SetKind::TrainingSet => 0,
            SetKind::Predictions => self.manifest.input_ticks,
        };
        let start = self.meta(window).start_time;
        self.window_states(window)
            .iter()
            .enumerate()
            .map(|(k, row)| {
                let t = Timestamp::new(start + (first_tick + k) as f64 * TICK_SECONDS)?;
                StateVector::from_array(t, &row.map(f64::from))
            })
            .collect()
    }

    /// Writes a prediction set that repeats this set's label ticks.
    pub fn write_label_predictions(&self, dir: &Path, variant: &str) -> Result<Manifest> {
        let mut w = ExchangeWriter::create_with(
            dir,
            SetKind::Predictions,
            Some(variant.to_string()),
            self.manifest.has_panoramas,
            self.manifest.window_spec(),
        )?;
        for i in 0..self.n_windows() {
            let panos = self.label_panoramas(i)?;
            w.push(
                self.meta(i).clone(),
                self.label_states(i),
                panos.as_ref().map(|p| p.iter().map(|g| g.as_slice())),
            )?;
        }
        w.finish()
    }
}
