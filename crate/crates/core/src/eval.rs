//! Prediction scoring and horizon curves.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

use crate::dataset::ExchangeSet;
use crate::error::{Error, Result};
use crate::state::{STATE_DIM, TICK_SECONDS};

/// Guards the panorama weight against an all-zero truth grid.
pub const PANO_MAX_EPS: f64 = 1e-9;

fn check_len(pred: usize, truth: usize) -> Result<()> {
    if pred == truth {
        Ok(())
    } else {
        Err(Error::LengthMismatch { pred, truth })
    }
}

/// Euclidean distance per aligned tick.
pub fn traj_loss(pred: &[Vector3<f64>], truth: &[Vector3<f64>]) -> Result<Vec<f64>> {
    check_len(pred.len(), truth.len())?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).norm()).collect())
}

/// Absolute area error per tick.
pub fn area_loss(pred: &[f64], truth: &[f64]) -> Result<Vec<f64>> {
    check_len(pred.len(), truth.len())?;
    Ok(pred.iter().zip(truth).map(|(p, t)| (p - t).abs()).collect())
}

/// Depth-weighted L1: mean over cells of `(1 - I / (2 max I)) * |pred - I|`.
pub fn pano_loss(pred: &[f32], truth: &[f32]) -> Result<f64> {
    if pred.len() != truth.len() {
        return Err(Error::Shape(format!(
            "predicted panorama has {} cells, truth has {}",
            pred.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::Shape("empty panorama".into()));
    }
    let max = truth.iter().fold(0.0f64, |m, &v| m.max(v as f64)).max(PANO_MAX_EPS);
    let sum: f64 = pred
        .iter()
        .zip(truth)
        .map(|(&p, &t)| (1.0 - 0.5 * t as f64 / max) * (p as f64 - t as f64).abs())
        .sum();
    Ok(sum / truth.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossMetric {
    Position,
    Velocity,
    SwayArea,
    Panorama,
}

impl LossMetric {
    pub fn label(self) -> &'static str {
        match self {
            LossMetric::Position => "position",
            LossMetric::Velocity => "velocity",
            LossMetric::SwayArea => "sway_area",
            LossMetric::Panorama => "panorama",
        }
    }
}

/// Per-tick losses of one predicted window under one metric.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredCase {
    pub scenario: String,
    pub variant: String,
    pub metric: LossMetric,
    pub losses: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonCurve {
    pub scenario: String,
    pub variant: String,
    pub metric: LossMetric,
    pub n: usize,
    pub mean: Vec<f64>,
    /// Population standard deviation across cases.
    pub std: Vec<f64>,
}

impl HorizonCurve {
    /// Horizon of each entry, seconds.
    pub fn horizons(&self) -> impl Iterator<Item = f64> + '_ {
        (1..=self.mean.len()).map(|k| k as f64 * TICK_SECONDS)
    }

    /// Running average of the mean curve over ticks `1..=k`.
    pub fn cumulative_mean(&self) -> Vec<f64> {
        let mut sum = 0.0;
        self.mean
            .iter()
            .enumerate()
            .map(|(i, m)| {
                sum += m;
                sum / (i + 1) as f64
            })
            .collect()
    }
}

fn vec3(row: &[f32; STATE_DIM], at: usize) -> Vector3<f64> {
    Vector3::new(row[at] as f64, row[at + 1] as f64, row[at + 2] as f64)
}

/// Scores predicted label ticks of one window against the truth. The
/// panorama metric is scored only when both sides carry panoramas.
pub fn score_window(
    scenario: &str,
    variant: &str,
    pred: &[[f32; STATE_DIM]],
    truth: &[[f32; STATE_DIM]],
    pred_panos: Option<&[Vec<f32>]>,
    truth_panos: Option<&[Vec<f32>]>,
) -> Result<Vec<ScoredCase>> {
    check_len(pred.len(), truth.len())?;
    let column = |rows: &[[f32; STATE_DIM]], f: &dyn Fn(&[f32; STATE_DIM]) -> Vector3<f64>| -> Vec<Vector3<f64>> {
        rows.iter().map(f).collect()
    };
    let case = |metric, losses| ScoredCase {
        scenario: scenario.to_string(),
        variant: variant.to_string(),
        metric,
        losses,
    };
    let mut out = vec![
        case(
            LossMetric::Position,
            traj_loss(&column(pred, &|r| vec3(r, 0)), &column(truth, &|r| vec3(r, 0)))?,
        ),
        case(
            LossMetric::Velocity,
            traj_loss(&column(pred, &|r| vec3(r, 7)), &column(truth, &|r| vec3(r, 7)))?,
        ),
        case(
            LossMetric::SwayArea,
            area_loss(
                &pred.iter().map(|r| r[13] as f64).collect::<Vec<_>>(),
                &truth.iter().map(|r| r[13] as f64).collect::<Vec<_>>(),
            )?,
        ),
    ];
    if let (Some(p), Some(t)) = (pred_panos, truth_panos) {
        check_len(p.len(), t.len())?;
        let losses = p.iter().zip(t).map(|(a, b)| pano_loss(a, b)).collect::<Result<_>>()?;
        out.push(case(LossMetric::Panorama, losses));
    }
    Ok(out)
}

/// Scores a prediction set against the training set it was made from.
/// Windows are matched by position and must agree on source and start.
pub fn score_predictions(truth: &ExchangeSet, pred: &ExchangeSet) -> Result<Vec<ScoredCase>> {
    if truth.n_windows() != pred.n_windows() {
        return Err(Error::Schema(format!(
            "prediction set has {} windows, truth has {}",
            pred.n_windows(),
            truth.n_windows()
        )));
    }
    if truth.manifest.label_ticks != pred.manifest.label_ticks {
        return Err(Error::Schema(format!(
            "prediction set has {} label ticks, truth has {}",
            pred.manifest.label_ticks, truth.manifest.label_ticks
        )));
    }
    let variant = pred.manifest.variant.clone().unwrap_or_else(|| "unnamed".into());
    let mut out = Vec::new();
    for w in 0..truth.n_windows() {
        let (tm, pm) = (truth.meta(w), pred.meta(w));
        if tm.source_id != pm.source_id || tm.start_tick != pm.start_tick {
            return Err(Error::Schema(format!(
                "window {w}: prediction is for {}@{}, truth is {}@{}",
                pm.source_id, pm.start_tick, tm.source_id, tm.start_tick
            )));
        }
        let (tp, pp) = (truth.label_panoramas(w)?, pred.label_panoramas(w)?);
        out.extend(score_window(
            tm.scenario.label(),
            &variant,
            pred.label_states(w),
            truth.label_states(w),
            pp.as_deref(),
            tp.as_deref(),
        )?);
    }
    Ok(out)
}

/// Mean and population standard deviation per tick, grouped by scenario,
/// variant and metric. Groups come out sorted.
pub fn horizon_curves(cases: &[ScoredCase]) -> Result<Vec<HorizonCurve>> {
    if cases.is_empty() {
        return Err(Error::EmptyGroup("no scored cases".into()));
    }
    let mut groups: BTreeMap<(String, String, LossMetric), Vec<&ScoredCase>> = BTreeMap::new();
    for c in cases {
        groups
            .entry((c.scenario.clone(), c.variant.clone(), c.metric))
            .or_default()
            .push(c);
    }
    groups
        .into_iter()
        .map(|((scenario, variant, metric), members)| {
            let ticks = members[0].losses.len();
            if ticks == 0 {
                return Err(Error::EmptyGroup(format!("{scenario}/{variant}/{}: no ticks", metric.label())));
            }
            for m in &members {
                check_len(m.losses.len(), ticks)?;
            }
            let n = members.len() as f64;
            let mean: Vec<f64> = (0..ticks).map(|k| members.iter().map(|m| m.losses[k]).sum::<f64>() / n).collect();
            let std = (0..ticks)
                .map(|k| {
                    let var = members.iter().map(|m| (m.losses[k] - mean[k]).powi(2)).sum::<f64>() / n;
                    var.sqrt()
                })
                .collect();
            Ok(HorizonCurve {
                scenario,
                variant,
                metric,
                n: members.len(),
                mean,
                std,
            })
        })
        .collect()
}

pub const CSV_HEADER: [&str; 8] = ["scenario", "variant", "metric", "horizon_s", "mean", "std", "n", "cumulative_mean"];

pub fn write_horizon_csv(path: &Path, curves: &[HorizonCurve]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(CSV_HEADER)?;
    for c in curves {
        for ((h, (m, s)), cm) in c.horizons().zip(c.mean.iter().zip(&c.std)).zip(c.cumulative_mean()) {
            w.write_record([
                c.scenario.clone(),
                c.variant.clone(),
                c.metric.label().to_string(),
                format!("{h:.2}"),
                m.to_string(),
                s.to_string(),
                c.n.to_string(),
                cm.to_string(),
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

const PALETTE: [&str; 6] = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"];

/// Line chart of mean curves with a shaded one-std band per curve.
pub fn horizon_svg(title: &str, curves: &[&HorizonCurve]) -> String {
    let (w, h, left, right, top, bottom) = (640.0, 400.0, 64.0, 160.0, 36.0, 48.0);
    let (pw, ph) = (w - left - right, h - top - bottom);
    let x_max = curves
        .iter()
        .map(|c| c.mean.len() as f64 * TICK_SECONDS)
        .fold(TICK_SECONDS, f64::max);
    let y_max = curves
        .iter()
        .flat_map(|c| c.mean.iter().zip(&c.std).map(|(m, s)| m + s))
        .fold(0.0, f64::max);
    let y_max = if y_max > 0.0 { y_max * 1.05 } else { 1.0 };
    let sx = |x: f64| left + x / x_max * pw;
    let sy = |y: f64| top + ph - y / y_max * ph;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}" font-family="sans-serif" font-size="12">"#
    );
    let _ = writeln!(s, r#"<rect width="{w}" height="{h}" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{}" y="22" text-anchor="middle" font-size="14">{}</text>"#, left + pw / 2.0, escape(title));
    let _ = writeln!(
        s,
        r#"<path d="M{left},{top} V{} H{}" fill="none" stroke="black"/>"#,
        top + ph,
        left + pw
    );
    for i in 0..=5 {
        let (xv, yv) = (x_max * i as f64 / 5.0, y_max * i as f64 / 5.0);
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">{xv:.2}</text>"#,
            sx(xv),
            top + ph + 16.0
        );
        let _ = writeln!(
            s,
            r#"<text x="{:.1}" y="{:.1}" text-anchor="end">{yv:.3}</text>"#,
            left - 6.0,
            sy(yv) + 4.0
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">horizon (s)</text>"#,
        left + pw / 2.0,
        h - 10.0
    );
    for (i, c) in curves.iter().enumerate() {
        let color = PALETTE[i % PALETTE.len()];
        let pts = |f: &dyn Fn(usize) -> f64| -> Vec<String> {
            (0..c.mean.len())
                .map(|k| format!("{:.2},{:.2}", sx((k + 1) as f64 * TICK_SECONDS), sy(f(k))))
                .collect()
        };
        let upper = pts(&|k| c.mean[k] + c.std[k]);
        let mut lower = pts(&|k| (c.mean[k] - c.std[k]).max(0.0));
        lower.reverse();
        let _ = writeln!(
            s,
            r#"<polygon points="{} {}" fill="{color}" fill-opacity="0.15" stroke="none"/>"#,
            upper.join(" "),
            lower.join(" ")
        );
        let _ = writeln!(
            s,
            r#"<polyline points="{}" fill="none" stroke="{color}" stroke-width="2"/>"#,
            pts(&|k| c.mean[k]).join(" ")
        );
        let ly = top + 16.0 + 18.0 * i as f64;
        let _ = writeln!(
            s,
            r#"<line x1="{:.1}" y1="{ly:.1}" x2="{:.1}" y2="{ly:.1}" stroke="{color}" stroke-width="2"/><text x="{:.1}" y="{:.1}">{} (n={})</text>"#,
            left + pw + 12.0,
            left + pw + 32.0,
            left + pw + 38.0,
            ly + 4.0,
            escape(&c.variant),
            c.n
        );
    }
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

fn file_stem(parts: &[&str]) -> String {
    parts
        .iter()
        .map(|p| p.chars().map(|c| if c.is_ascii_alphanumeric() || c == '-' { c } else { '_' }).collect::<String>())
        .collect::<Vec<_>>()
        .join("__")
}

/// Files written by [`horizon_report`].
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportFiles {
    pub combined_csv: PathBuf,
    pub group_csvs: Vec<PathBuf>,
    pub plots: Vec<PathBuf>,
}

/// Aggregates cases into horizon curves and writes `horizon.csv`, one CSV
/// per group and one SVG per (scenario, metric) comparing variants.
pub fn horizon_report(cases: &[ScoredCase], out_dir: &Path) -> Result<(Vec<HorizonCurve>, ReportFiles)> {
    let curves = horizon_curves(cases)?;
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut files = ReportFiles {
        combined_csv: out_dir.join("horizon.csv"),
        ..ReportFiles::default()
    };
    write_horizon_csv(&files.combined_csv, &curves)?;
    let mut figures: BTreeMap<(String, LossMetric), Vec<&HorizonCurve>> = BTreeMap::new();
    for c in &curves {
        let path = out_dir.join(format!("{}.csv", file_stem(&[&c.scenario, &c.variant, c.metric.label()])));
        write_horizon_csv(&path, std::slice::from_ref(c))?;
        files.group_csvs.push(path);
        figures.entry((c.scenario.clone(), c.metric)).or_default().push(c);
    }
    for ((scenario, metric), members) in figures {
        let path = out_dir.join(format!("{}.svg", file_stem(&[&scenario, metric.label()])));
        let svg = horizon_svg(&format!("{scenario}: {} loss", metric.label()), &members);
        fs::write(&path, svg).map_err(|e| Error::io(&path, e))?;
        files.plots.push(path);
    }
    Ok((curves, files))
}
