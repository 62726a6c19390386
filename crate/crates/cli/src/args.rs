use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use swaywatch::dataset::{DEFAULT_MAX_RADIUS, DEFAULT_STRIDE, INPUT_TICKS, LABEL_TICKS};
use swaywatch::detector::DetectorConfig;
use swaywatch::panorama::DEFAULT_QUEUE_CAPACITY;
use swaywatch::simgait::SceneKind;
use swaywatch::sway::{SwayConfig, CHI2_95_2DOF, DEFAULT_WINDOW_LEN};
use swaywatch::TICK_SECONDS;

#[derive(Debug, Parser, Serialize)]
#[command(name = "swaywatch", version, about = "Torso sway analysis and trajectory-prediction tooling")]
pub struct Cli {
    /// Print machine-readable JSON on stdout instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    /// More log output on stderr; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    pub verbose: u8,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    /// Simulate treadmill or scene walks into trial directories.
    #[command(subcommand)]
    Simulate(Simulate),
    /// Detect perturbations and compare the sway and tilt metrics.
    Detect(DetectArgs),
    /// Cut trials into training windows and export them.
    Dataset(DatasetArgs),
    /// Write predictions that repeat the labels of a training set.
    Identity(IdentityArgs),
    /// Score prediction sets and write horizon curves.
    Eval(EvalArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct OutArg {
    /// Output directory.
    #[arg(long, short, env = "SWAYWATCH_OUT")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize, Clone)]
pub struct GaitArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Seconds per trial (treadmill default 60, batch 30, walk: whole route).
    #[arg(long)]
    pub duration: Option<f64>,
    /// Walking speed, m/s.
    #[arg(long, default_value_t = 1.25)]
    pub speed: f64,
    /// Steps per second.
    #[arg(long, default_value_t = 1.9)]
    pub step_frequency: f64,
    /// Stationary std of the postural jitter, degrees.
    #[arg(long, default_value_t = 0.1)]
    pub noise: f64,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Simulate {
    /// Treadmill trials with perturbations, no scene.
    Treadmill(TreadmillArgs),
    /// A walk along waypoints through a generated or loaded scene.
    Walk(WalkArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct TreadmillArgs {
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub gait: GaitArgs,
    /// Number of trials (default 1, or 192 with `--batch`).
    #[arg(long)]
    pub trials: Option<usize>,
    /// Protocol batch: one perturbation per trial, magnitudes alternating
    /// and directions cycling. Defaults to 192 trials of 30 s.
    #[arg(long)]
    pub batch: bool,
    /// Also write an unperturbed control per trial.
    #[arg(long)]
    pub controls: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct WalkArgs {
    #[command(flatten)]
    pub out: OutArg,
    #[command(flatten)]
    pub gait: GaitArgs,
    /// Waypoints as `x,y;x,y;...` in meters.
    #[arg(long, required = true)]
    pub waypoints: String,
    #[arg(long, value_enum, default_value_t = SceneArg::Indoor)]
    pub scene: SceneArg,
    /// Scene geometry as JSON instead of a generated one.
    #[arg(long)]
    pub scene_file: Option<PathBuf>,
    /// Trial directory name.
    #[arg(long, default_value = "walk")]
    pub id: String,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SceneArg {
    Treadmill,
    Indoor,
    OutdoorCluttered,
    OutdoorFree,
}

impl From<SceneArg> for SceneKind {
    fn from(s: SceneArg) -> Self {
        match s {
            SceneArg::Treadmill => SceneKind::Treadmill,
            SceneArg::Indoor => SceneKind::Indoor,
            SceneArg::OutdoorCluttered => SceneKind::OutdoorCluttered,
            SceneArg::OutdoorFree => SceneKind::OutdoorFree,
        }
    }
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct SwayArgs {
    /// Sway window, ticks.
    #[arg(long, default_value_t = DEFAULT_WINDOW_LEN)]
    pub window_len: usize,
    /// Tick spacing, seconds.
    #[arg(long, default_value_t = TICK_SECONDS)]
    pub tick_seconds: f64,
    /// Chi-squared quantile of the sway ellipse.
    #[arg(long, default_value_t = CHI2_95_2DOF)]
    pub chi2: f64,
}

impl From<SwayArgs> for SwayConfig {
    fn from(a: SwayArgs) -> Self {
        SwayConfig {
            window_len: a.window_len,
            tick_seconds: a.tick_seconds,
            chi2_quantile: a.chi2,
        }
    }
}

#[derive(Debug, Args, Serialize, Clone, Copy)]
pub struct DetectorArgs {
    /// Threshold as a multiple of the noise floor.
    #[arg(long, default_value_t = DetectorConfig::default().threshold_mult)]
    pub threshold_mult: f64,
    /// Quiet seconds before a new event may open.
    #[arg(long, default_value_t = DetectorConfig::default().refractory)]
    pub refractory: f64,
    /// Seconds after a true onset within which a detection counts.
    #[arg(long, default_value_t = DetectorConfig::default().match_window)]
    pub match_window: f64,
    /// Seconds after each true onset left out of the noise floor.
    #[arg(long, default_value_t = DetectorConfig::default().exclusion_span)]
    pub exclusion_span: f64,
}

impl From<DetectorArgs> for DetectorConfig {
    fn from(a: DetectorArgs) -> Self {
        DetectorConfig {
            threshold_mult: a.threshold_mult,
            refractory: a.refractory,
            match_window: a.match_window,
            exclusion_span: a.exclusion_span,
        }
    }
}

#[derive(Debug, Args, Serialize)]
pub struct DetectArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// A trial directory or a directory of trial directories.
    #[arg(long, required_unless_present = "batch", conflicts_with = "batch")]
    pub input: Option<PathBuf>,
    /// Simulate the protocol batch in memory instead of reading trials.
    #[arg(long)]
    pub batch: bool,
    /// Batch size.
    #[arg(long, default_value_t = 192)]
    pub trials: usize,
    #[command(flatten)]
    pub gait: GaitArgs,
    #[command(flatten)]
    pub sway: SwayArgs,
    #[command(flatten)]
    pub detector: DetectorArgs,
    /// Skip the per-trial trace CSVs.
    #[arg(long)]
    pub no_traces: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DatasetArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// A trial directory or a directory of trial directories.
    #[arg(long)]
    pub input: PathBuf,
    /// Ticks between window starts.
    #[arg(long, default_value_t = DEFAULT_STRIDE)]
    pub stride: usize,
    #[arg(long, default_value_t = INPUT_TICKS)]
    pub input_ticks: usize,
    #[arg(long, default_value_t = LABEL_TICKS)]
    pub label_ticks: usize,
    /// Keep windows whose tightest turn is below this radius, meters.
    #[arg(long, default_value_t = DEFAULT_MAX_RADIUS)]
    pub max_radius: f64,
    /// Keep every window regardless of curvature.
    #[arg(long)]
    pub no_curvature_filter: bool,
    /// Clouds merged into each panorama.
    #[arg(long, default_value_t = DEFAULT_QUEUE_CAPACITY)]
    pub queue_capacity: usize,
    /// Leave panoramas out of the export.
    #[arg(long)]
    pub no_panoramas: bool,
    /// Split file with `train` and `test` id lists.
    #[arg(long, requires = "subset")]
    pub split: Option<PathBuf>,
    #[arg(long, value_enum, requires = "split")]
    pub subset: Option<SubsetArg>,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SubsetArg {
    Train,
    Test,
}

#[derive(Debug, Args, Serialize)]
pub struct IdentityArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Training-set directory.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value = "identity")]
    pub variant: String,
}

#[derive(Debug, Args, Serialize)]
pub struct EvalArgs {
    #[command(flatten)]
    pub out: OutArg,
    /// Training-set directory the predictions were made from.
    #[arg(long)]
    pub truth: PathBuf,
    /// Prediction directory; repeat for several variants.
    #[arg(long = "pred", required = true)]
    pub preds: Vec<PathBuf>,
}
