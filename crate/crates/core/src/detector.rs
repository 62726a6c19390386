//! Perturbation detection on per-tick rate series.
//!
//! Both the sway-area rate (`delta_sigma_z`) and the torso-tilt rate
//! (`delta_theta_z`) go through the same machinery, so the two metrics can be
//! compared head to head on identical trials.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::UnitQuaternion;
use crate::state::Timestamp;
use crate::sway::{project_stream, sway_series, torso_tilt_series, SwayConfig};

/// Scales a median absolute deviation to a Gaussian standard deviation.
pub const MAD_SCALE: f64 = 1.4826;
/// Fewest unexcluded ticks a noise floor is computed from.
pub const MIN_NOISE_TICKS: usize = 100;

/// A uniformly sampled metric trace.
pub type Series = [(Timestamp, f64)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Metric {
    SwayArea,
    TorsoAngle,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerturbationEvent {
    pub onset: Timestamp,
    /// Largest |value| while the event was active.
    pub peak_value: f64,
    pub peak_time: Timestamp,
    pub metric: Metric,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub threshold_mult: f64,
    /// Quiet time after the last supra-threshold tick before a new event may open, s.
    pub refractory: f64,
    /// A detection counts for a true onset if it opens within this many seconds after it.
    pub match_window: f64,
    /// Span after each true onset left out of the noise floor, s.
    pub exclusion_span: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold_mult: 5.0,
            refractory: 2.5,
            match_window: 2.5,
            exclusion_span: 7.5,
        }
    }
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

fn excluded(t: Timestamp, exclusions: &[(Timestamp, Timestamp)]) -> bool {
    exclusions.iter().any(|(a, b)| t >= *a && t <= *b)
}

/// Robust noise scale: `1.4826 * MAD(|v|)` over ticks outside `exclusions`.
pub fn noise_floor(series: &Series, exclusions: &[(Timestamp, Timestamp)]) -> Result<f64> {
    let mut mags: Vec<f64> = series
        .iter()
        .filter(|(t, _)| !excluded(*t, exclusions))
        .map(|(_, v)| v.abs())
        .collect();
    if mags.len() < MIN_NOISE_TICKS {
        return Err(Error::InsufficientData {
            needed: MIN_NOISE_TICKS,
            got: mags.len(),
        });
    }
    let center = median(&mut mags);
    let mut deviations: Vec<f64> = mags.iter().map(|m| (m - center).abs()).collect();
    Ok(MAD_SCALE * median(&mut deviations))
}

fn mean_magnitude(series: &Series, exclusions: &[(Timestamp, Timestamp)]) -> f64 {
    let (sum, n) = series
        .iter()
        .filter(|(t, _)| !excluded(*t, exclusions))
        .fold((0.0, 0usize), |(s, n), (_, v)| (s + v.abs(), n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Thresholds `|value|` at `threshold_mult` noise floors. An event stays open
/// while supra-threshold ticks keep arriving within `refractory` of each other.
pub fn detect_events(series: &Series, metric: Metric, config: &DetectorConfig) -> Result<Vec<PerturbationEvent>> {
    let threshold = config.threshold_mult * noise_floor(series, &[])?;
    let mut events = Vec::new();
    let mut open: Option<(PerturbationEvent, Timestamp)> = None;
    for &(t, v) in series {
        if let Some((event, last_above)) = open {
            if t.secs() - last_above.secs() > config.refractory {
                events.push(event);
                open = None;
            }
        }
        let magnitude = v.abs();
        if magnitude <= threshold {
            continue;
        }
        match &mut open {
            Some((event, last_above)) => {
                *last_above = t;
                if magnitude > event.peak_value {
                    event.peak_value = magnitude;
                    event.peak_time = t;
                }
            }
            None => {
                open = Some((
                    PerturbationEvent {
                        onset: t,
                        peak_value: magnitude,
                        peak_time: t,
                        metric,
                    },
                    t,
                ));
            }
        }
    }
    events.extend(open.map(|(e, _)| e));
    Ok(events)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakToNoise {
    pub noise_floor: f64,
    pub ratios: Vec<f64>,
    pub mean: f64,
    /// Peak over the mean |value| outside the exclusion windows.
    pub peak_over_baseline: Vec<f64>,
}

/// Peak |value| within `match_window` after each true onset, relative to the
/// noise floor measured with the perturbation spans excluded.
pub fn peak_to_noise(series: &Series, true_onsets: &[Timestamp], config: &DetectorConfig) -> Result<PeakToNoise> {
    let exclusions: Vec<_> = true_onsets
        .iter()
        .map(|t| (*t, Timestamp::from_secs(t.secs() + config.exclusion_span)))
        .collect();
    let floor = noise_floor(series, &exclusions)?;
    if floor <= 0.0 {
        return Err(Error::UndefinedRatio);
    }
    let baseline = mean_magnitude(series, &exclusions);
    let peaks: Vec<f64> = true_onsets
        .iter()
        .map(|onset| {
            series
                .iter()
                .filter(|(t, _)| t.secs() >= onset.secs() && t.secs() <= onset.secs() + config.match_window)
                .map(|(_, v)| v.abs())
                .fold(0.0, f64::max)
        })
        .collect();
    let ratios: Vec<f64> = peaks.iter().map(|p| p / floor).collect();
    let mean = if ratios.is_empty() {
        0.0
    } else {
        ratios.iter().sum::<f64>() / ratios.len() as f64
    };
    Ok(PeakToNoise {
        noise_floor: floor,
        peak_over_baseline: peaks.iter().map(|p| p / baseline).collect(),
        ratios,
        mean,
    })
}

/// Both metric traces of one trial plus its ground truth.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSeries {
    pub id: String,
    pub duration: f64,
    pub sway_rate: Vec<(Timestamp, f64)>,
    pub angle_rate: Vec<(Timestamp, f64)>,
    pub true_onsets: Vec<Timestamp>,
}

impl TrialSeries {
    /// Derives both rate traces from a torso orientation stream.
    pub fn from_orientations(
        id: impl Into<String>,
        orientations: &[(Timestamp, UnitQuaternion)],
        true_onsets: Vec<Timestamp>,
        sway: SwayConfig,
    ) -> Result<Self> {
        let sway_rate = sway_series(&project_stream(orientations), sway)?
            .into_iter()
            .map(|s| (s.timestamp, s.delta_sigma_z))
            .collect();
        let angle_rate = torso_tilt_series(orientations, sway.tick_seconds)
            .into_iter()
            .map(|s| (s.timestamp, s.delta_theta_z))
            .collect();
        let duration = match (orientations.first(), orientations.last()) {
            (Some(a), Some(b)) => b.0.secs() - a.0.secs() + sway.tick_seconds,
            _ => 0.0,
        };
        Ok(Self {
            id: id.into(),
            duration,
            sway_rate,
            angle_rate,
            true_onsets,
        })
    }

    pub fn series(&self, metric: Metric) -> &Series {
        match metric {
            Metric::SwayArea => &self.sway_rate,
            Metric::TorsoAngle => &self.angle_rate,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialOutcome {
    pub id: String,
    pub events: Vec<PerturbationEvent>,
    pub true_events: Vec<Timestamp>,
    /// Index into `events` of the detection matched to each true event.
    pub matched: Vec<Option<usize>>,
    pub false_positives: usize,
    /// `None` when the trial has no true events or no usable noise floor.
    pub peak_to_noise: Option<PeakToNoise>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionReport {
    pub metric: Metric,
    pub n_trials: usize,
    pub n_true_events: usize,
    pub n_detected: usize,
    /// `None` when there were no true events to detect.
    pub detection_rate: Option<f64>,
    pub false_positives: usize,
    pub false_positives_per_minute: f64,
    pub mean_peak_to_noise: Option<f64>,
    pub mean_peak_over_baseline: Option<f64>,
    pub mean_detection_latency: Option<f64>,
    pub trials: Vec<TrialOutcome>,
}

/// Matches detections to truth: the earliest unused event opening within
/// `match_window` after the true onset.
fn match_events(events: &[PerturbationEvent], truth: &[Timestamp], match_window: f64) -> Vec<Option<usize>> {
    let mut used = vec![false; events.len()];
    truth
        .iter()
        .map(|onset| {
            let hit = events.iter().enumerate().position(|(i, e)| {
                !used[i] && e.onset.secs() >= onset.secs() - 1e-9 && e.onset.secs() <= onset.secs() + match_window
            });
            if let Some(i) = hit {
                used[i] = true;
            }
            hit
        })
        .collect()
}

pub fn evaluate_trial(trial: &TrialSeries, metric: Metric, config: &DetectorConfig) -> Result<TrialOutcome> {
    let series = trial.series(metric);
    let events = detect_events(series, metric, config)?;
    let matched = match_events(&events, &trial.true_onsets, config.match_window);
    let false_positives = events.len() - matched.iter().flatten().count();
    let peak_to_noise = if trial.true_onsets.is_empty() {
        None
    } else {
        match peak_to_noise(series, &trial.true_onsets, config) {
            Ok(p) => Some(p),
            Err(Error::UndefinedRatio) => None,
            Err(e) => return Err(e),
        }
    };
    Ok(TrialOutcome {
        id: trial.id.clone(),
        events,
        true_events: trial.true_onsets.clone(),
        matched,
        false_positives,
        peak_to_noise,
    })
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

pub fn summarize(metric: Metric, trials: Vec<TrialOutcome>, total_seconds: f64) -> DetectionReport {
    let n_true_events = trials.iter().map(|t| t.true_events.len()).sum();
    let n_detected = trials.iter().map(|t| t.matched.iter().flatten().count()).sum();
    let false_positives = trials.iter().map(|t| t.false_positives).sum();
    let latencies = trials.iter().flat_map(|t| {
        t.matched
            .iter()
            .zip(&t.true_events)
            .filter_map(|(m, onset)| m.map(|i| t.events[i].onset.secs() - onset.secs()))
    });
    let mean_detection_latency = mean(latencies);
    let ptn = trials.iter().filter_map(|t| t.peak_to_noise.as_ref());
    let mean_peak_to_noise = mean(ptn.clone().flat_map(|p| p.ratios.iter().copied()));
    let mean_peak_over_baseline = mean(ptn.flat_map(|p| p.peak_over_baseline.iter().copied()));
    DetectionReport {
        metric,
        n_trials: trials.len(),
        n_true_events,
        n_detected,
        detection_rate: (n_true_events > 0).then(|| n_detected as f64 / n_true_events as f64),
        false_positives,
        false_positives_per_minute: if total_seconds > 0.0 {
            false_positives as f64 / (total_seconds / 60.0)
        } else {
            0.0
        },
        mean_peak_to_noise,
        mean_peak_over_baseline,
        mean_detection_latency,
        trials,
    }
}

/// Runs both metrics over the same trials. Trials are scored in parallel;
/// the report order follows the input order.
pub fn compare_metrics(trials: &[TrialSeries], config: &DetectorConfig) -> Result<(DetectionReport, DetectionReport)> {
    let total_seconds: f64 = trials.iter().map(|t| t.duration).sum();
    let run = |metric| -> Result<DetectionReport> {
        let outcomes = trials
            .par_iter()
            .map(|t| evaluate_trial(t, metric, config))
            .collect::<Result<Vec<_>>>()?;
        Ok(summarize(metric, outcomes, total_seconds))
    };
    Ok((run(Metric::SwayArea)?, run(Metric::TorsoAngle)?))
}
