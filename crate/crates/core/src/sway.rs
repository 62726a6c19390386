//! Torso sway covariance.
//!
//! The torso's vertical axis is rotated into the start frame and its x/y
//! components (the "shadow" of the up-vector on the ground plane) are
//! collected over a sliding window. A 2D Gaussian is fitted to the window and
//! its 95% prediction ellipse is summarized by its area, `sigma_z`. The
//! backward difference of `sigma_z` is the perturbation signal.

use std::collections::VecDeque;

use nalgebra::{Matrix2, Vector2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frame::{rotate_vector, UnitQuaternion};
use crate::state::{Timestamp, TICK_SECONDS};

/// 95% quantile of the chi-squared distribution with two degrees of freedom.
pub const CHI2_95_2DOF: f64 = 5.991;

/// 2.5 s at 20 Hz.
pub const DEFAULT_WINDOW_LEN: usize = 50;

/// Eigenvalues down to this (negative) value are rounding noise and clamp to 0.
const EIGEN_CLAMP: f64 = -1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundProjection {
    pub timestamp: Timestamp,
    pub point: Vector2<f64>,
}

/// x/y of the torso up-vector expressed in the start frame.
pub fn project_torso_vertical(orientation: &UnitQuaternion) -> Vector2<f64> {
    let up = rotate_vector(orientation, &Vector3::z());
    Vector2::new(up.x, up.y)
}

pub fn project_stream(orientations: &[(Timestamp, UnitQuaternion)]) -> Vec<GroundProjection> {
    orientations
        .iter()
        .map(|(t, q)| GroundProjection {
            timestamp: *t,
            point: project_torso_vertical(q),
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian2 {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
}

/// Sample mean and unbiased (1/(n-1)) sample covariance.
pub fn fit_gaussian(points: &[Vector2<f64>]) -> Result<Gaussian2> {
    let n = points.len();
    if n < 3 {
        return Err(Error::InsufficientData { needed: 3, got: n });
    }
    if points.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidInput("non-finite ground projection".into()));
    }
    let mean = points.iter().sum::<Vector2<f64>>() / n as f64;
    let scatter = points.iter().fold(Matrix2::zeros(), |acc, p| {
        let d = p - mean;
        acc + d * d.transpose()
    });
    Ok(Gaussian2 {
        mean,
        cov: scatter / (n - 1) as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwayEllipse {
    pub mean: Vector2<f64>,
    pub cov: Matrix2<f64>,
    /// Major and minor semi-axes, `m1 >= m2 >= 0`.
    pub axes: (f64, f64),
    /// Radians.
    pub rotation: f64,
    pub area: f64,
    /// Chi-squared quantile the axes are scaled by.
    pub quantile: f64,
}

impl SwayEllipse {
    /// Squared Mahalanobis distance of `p` from the ellipse center.
    /// Infinite off the support of a singular covariance.
    pub fn mahalanobis_sq(&self, p: &Vector2<f64>) -> f64 {
        let d = p - self.mean;
        match self.cov.try_inverse() {
            Some(inv) => (d.transpose() * inv * d)[0],
            None if d.norm() == 0.0 => 0.0,
            None => f64::INFINITY,
        }
    }

    pub fn contains(&self, p: &Vector2<f64>) -> bool {
        self.mahalanobis_sq(p) <= self.quantile
    }
}

/// Eigen-decomposes `cov = [a, b; b, c]` in closed form and builds the 95%
/// ellipse.
pub fn ellipse_from_cov(mean: Vector2<f64>, cov: Matrix2<f64>) -> Result<SwayEllipse> {
    ellipse_at_quantile(mean, cov, CHI2_95_2DOF)
}

/// Same as [`ellipse_from_cov`] for another chi-squared quantile.
pub fn ellipse_at_quantile(mean: Vector2<f64>, cov: Matrix2<f64>, quantile: f64) -> Result<SwayEllipse> {
    if !(quantile > 0.0 && quantile.is_finite()) {
        return Err(Error::InvalidInput(format!("chi-squared quantile {quantile} must be positive")));
    }
    let (a, b, b2, c) = (cov[(0, 0)], cov[(0, 1)], cov[(1, 0)], cov[(1, 1)]);
    if !cov.iter().all(|v| v.is_finite()) {
        return Err(Error::InvalidCovariance(format!("non-finite entries {cov:?}")));
    }
    if (b - b2).abs() > 1e-9 * (a.abs() + c.abs()).max(1.0) {
        return Err(Error::InvalidCovariance(format!("asymmetric off-diagonal {b} vs {b2}")));
    }
    let b = 0.5 * (b + b2);
    let half_trace = 0.5 * (a + c);
    let radius = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let det = a * c - b * b;
    let l1 = half_trace + radius;
    // det / l1 keeps precision for nearly singular matrices.
    let l2 = if l1 > 0.0 { det / l1 } else { half_trace - radius };
    if l1 < EIGEN_CLAMP || l2 < EIGEN_CLAMP {
        return Err(Error::InvalidCovariance(format!("indefinite, eigenvalues ({l1}, {l2})")));
    }
    let (l1, l2) = (l1.max(0.0), l2.max(0.0));
    let m1 = (quantile * l1).sqrt();
    let m2 = (quantile * l2).sqrt();
    let dy = l1 - a;
    // atan2(0, 0) is undefined (isotropic case); report 0 regardless of zero signs.
    let rotation = if dy == 0.0 && b == 0.0 { 0.0 } else { dy.atan2(b) };
    Ok(SwayEllipse {
        mean,
        cov,
        axes: (m1, m2),
        rotation,
        area: std::f64::consts::PI * m1 * m2,
        quantile,
    })
}

pub fn fit_ellipse(points: &[Vector2<f64>]) -> Result<SwayEllipse> {
    let g = fit_gaussian(points)?;
    ellipse_from_cov(g.mean, g.cov)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwayConfig {
    pub window_len: usize,
    pub tick_seconds: f64,
    #[serde(default = "default_quantile")]
    pub chi2_quantile: f64,
}

fn default_quantile() -> f64 {
    CHI2_95_2DOF
}

impl Default for SwayConfig {
    fn default() -> Self {
        Self {
            window_len: DEFAULT_WINDOW_LEN,
            tick_seconds: TICK_SECONDS,
            chi2_quantile: CHI2_95_2DOF,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwaySample {
    pub timestamp: Timestamp,
    pub sigma_z: f64,
    /// Backward difference of `sigma_z`, area units per second.
    pub delta_sigma_z: f64,
}

/// Streaming sway metric. Owns its window; one tracker per stream.
#[derive(Debug, Clone)]
pub struct SwayTracker {
    config: SwayConfig,
    window: VecDeque<Vector2<f64>>,
    previous: Option<f64>,
}

impl SwayTracker {
    pub fn new(config: SwayConfig) -> Result<Self> {
        if config.window_len < 3 {
            return Err(Error::InvalidInput(format!(
                "window length {} is below the 3 points a Gaussian fit needs",
                config.window_len
            )));
        }
        if !(config.tick_seconds > 0.0) {
            return Err(Error::InvalidInput("tick spacing must be positive".into()));
        }
        if !(config.chi2_quantile > 0.0 && config.chi2_quantile.is_finite()) {
            return Err(Error::InvalidInput("chi-squared quantile must be positive".into()));
        }
        Ok(Self {
            window: VecDeque::with_capacity(config.window_len + 1),
            config,
            previous: None,
        })
    }

    /// Pushes one projection; returns a sample once the window is full.
    pub fn push(&mut self, projection: &GroundProjection) -> Result<Option<SwaySample>> {
        self.window.push_back(projection.point);
        if self.window.len() > self.config.window_len {
            self.window.pop_front();
        }
        if self.window.len() < self.config.window_len {
            return Ok(None);
        }
        let g = fit_gaussian(self.window.make_contiguous())?;
        let ellipse = ellipse_at_quantile(g.mean, g.cov, self.config.chi2_quantile)?;
        let sigma_z = ellipse.area;
        let delta_sigma_z = self
            .previous
            .map_or(0.0, |prev| (sigma_z - prev) / self.config.tick_seconds);
        self.previous = Some(sigma_z);
        Ok(Some(SwaySample {
            timestamp: projection.timestamp,
            sigma_z,
            delta_sigma_z,
        }))
    }

    /// Ellipse over the current window, if full.
    pub fn current_ellipse(&self) -> Option<SwayEllipse> {
        if self.window.len() < self.config.window_len {
            return None;
        }
        let pts: Vec<_> = self.window.iter().copied().collect();
        let g = fit_gaussian(&pts).ok()?;
        ellipse_at_quantile(g.mean, g.cov, self.config.chi2_quantile).ok()
    }
}

/// Runs a [`SwayTracker`] over a whole stream. The first `window_len - 1`
/// ticks produce nothing.
pub fn sway_series(projections: &[GroundProjection], config: SwayConfig) -> Result<Vec<SwaySample>> {
    let mut tracker = SwayTracker::new(config)?;
    if projections.len() < config.window_len {
        return Err(Error::InsufficientData {
            needed: config.window_len,
            got: projections.len(),
        });
    }
    let mut out = Vec::with_capacity(projections.len() + 1 - config.window_len);
    for p in projections {
        if let Some(s) = tracker.push(p)? {
            out.push(s);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TiltSample {
    pub timestamp: Timestamp,
    /// Angle between the torso up-vector and the ground normal, radians.
    pub theta_z: f64,
    pub delta_theta_z: f64,
}

pub fn torso_tilt(orientation: &UnitQuaternion) -> f64 {
    rotate_vector(orientation, &Vector3::z()).z.clamp(-1.0, 1.0).acos()
}

/// Torso tilt and its backward difference; the first tick has zero rate.
pub fn torso_tilt_series(orientations: &[(Timestamp, UnitQuaternion)], tick_seconds: f64) -> Vec<TiltSample> {
    let mut previous = None;
    orientations
        .iter()
        .map(|(t, q)| {
            let theta_z = torso_tilt(q);
            let delta_theta_z = previous.map_or(0.0, |p| (theta_z - p) / tick_seconds);
            previous = Some(theta_z);
            TiltSample {
                timestamp: *t,
                theta_z,
                delta_theta_z,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    fn stream(points: &[Vector2<f64>]) -> Vec<GroundProjection> {
        points
            .iter()
            .enumerate()
            .map(|(k, p)| GroundProjection {
                timestamp: Timestamp::from_tick(k),
                point: *p,
            })
            .collect()
    }

    #[test]
    fn projection_examples() {
        assert_eq!(project_torso_vertical(&UnitQuaternion::identity()), Vector2::zeros());
        let pitch = UnitQuaternion::from_axis_angle(Vector3::y(), 30f64.to_radians());
        let p = project_torso_vertical(&pitch);
        assert!(close(p.x, 0.5, 1e-12) && close(p.y, 0.0, 1e-12));
        for yaw in [0.3, -2.0, PI] {
            let p = project_torso_vertical(&UnitQuaternion::from_yaw(yaw));
            assert!(p.norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_unit_square() {
        let pts = [
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(1.0, 1.0),
        ];
        let g = fit_gaussian(&pts).unwrap();
        assert_eq!(g.mean, Vector2::new(0.5, 0.5));
        // Hand-computed: each axis has squared deviations 4 x 0.25 over n-1 = 3.
        assert!((g.cov - Matrix2::new(1.0 / 3.0, 0.0, 0.0, 1.0 / 3.0)).norm() < 1e-15);
    }

    #[test]
    fn gaussian_degenerate_and_short() {
        let g = fit_gaussian(&[Vector2::new(0.2, -0.1); 5]).unwrap();
        assert_eq!(g.cov, Matrix2::zeros());
        assert!(matches!(
            fit_gaussian(&[Vector2::zeros(); 2]),
            Err(Error::InsufficientData { needed: 3, got: 2 })
        ));
    }

    #[test]
    fn ellipse_identity() {
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::identity()).unwrap();
        assert!(close(e.axes.0, 2.44766, 1e-5) && close(e.axes.1, 2.44766, 1e-5));
        assert!(close(e.area, PI * 5.991, 1e-12));
        assert!(close(e.area, 18.8213, 1e-4));
        assert_eq!(e.rotation, 0.0);
    }

    #[test]
    fn ellipse_diagonal() {
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::new(4.0, 0.0, 0.0, 1.0)).unwrap();
        assert!(close(e.axes.0, 2.0 * 5.991f64.sqrt(), 1e-12));
        assert!(close(e.axes.0, 4.89533, 5e-5));
        assert!(close(e.axes.1, 2.44766, 1e-5));
        assert_eq!(e.rotation, 0.0);
        assert!(close(e.area, 37.6426, 1e-4));
    }

    #[test]
    fn ellipse_rotated() {
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::new(2.0, 1.0, 1.0, 2.0)).unwrap();
        assert!(close(e.axes.0, (5.991f64 * 3.0).sqrt(), 1e-12));
        assert!(close(e.axes.1, 5.991f64.sqrt(), 1e-12));
        assert!(close(e.rotation, FRAC_PI_4, 1e-12));
        assert!(close(e.area, 32.5994, 1e-4));
    }

    #[test]
    fn ellipse_tall_diagonal_is_quarter_turn() {
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::new(1.0, 0.0, 0.0, 4.0)).unwrap();
        assert!(close(e.rotation, FRAC_PI_2, 1e-12));
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::new(1.0, -0.0, -0.0, 4.0)).unwrap();
        assert!(close(e.rotation, FRAC_PI_2, 1e-12));
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::new(3.0, -0.0, -0.0, 3.0)).unwrap();
        assert_eq!(e.rotation, 0.0);
    }

    #[test]
    fn ellipse_rejects_bad_cov() {
        assert!(matches!(
            ellipse_from_cov(Vector2::zeros(), Matrix2::new(1.0, 0.5, 0.0, 1.0)),
            Err(Error::InvalidCovariance(_))
        ));
        assert!(matches!(
            ellipse_from_cov(Vector2::zeros(), Matrix2::new(1.0, 2.0, 2.0, 1.0)),
            Err(Error::InvalidCovariance(_))
        ));
        // Rounding-level negativity is clamped.
        let e = ellipse_from_cov(Vector2::zeros(), Matrix2::new(1.0, 1.0, 1.0, 1.0 - 1e-16)).unwrap();
        assert_eq!(e.axes.1, 0.0);
        assert_eq!(e.area, 0.0);
    }

    #[test]
    fn series_constant_stream() {
        let s = sway_series(&stream(&[Vector2::new(0.1, 0.05); 80]), SwayConfig::default()).unwrap();
        assert_eq!(s.len(), 80 - 49);
        assert_eq!(s[0].timestamp, Timestamp::from_tick(49));
        assert!(s.iter().all(|x| x.sigma_z == 0.0 && x.delta_sigma_z == 0.0));
    }

    #[test]
    fn quantile_scales_area() {
        let cov = Matrix2::new(2.0, 0.3, 0.3, 1.0);
        let base = ellipse_from_cov(Vector2::zeros(), cov).unwrap();
        let wide = ellipse_at_quantile(Vector2::zeros(), cov, 9.21).unwrap();
        assert!((wide.area / base.area - 9.21 / CHI2_95_2DOF).abs() < 1e-12);
        assert!(wide.contains(&Vector2::new(3.5, 0.0)) && !base.contains(&Vector2::new(3.5, 0.0)));
        assert!(ellipse_at_quantile(Vector2::zeros(), cov, 0.0).is_err());
    }

    #[test]
    fn series_too_short() {
        let r = sway_series(&stream(&[Vector2::zeros(); 49]), SwayConfig::default());
        assert!(matches!(r, Err(Error::InsufficientData { needed: 50, got: 49 })));
        let bad = SwayConfig {
            window_len: 2,
            ..SwayConfig::default()
        };
        assert!(sway_series(&stream(&[Vector2::zeros(); 10]), bad).is_err());
    }

    #[test]
    fn delta_is_backward_difference() {
        // Three-point window: two fixed points and a third that moves so the
        // area goes from a to b between consecutive ticks.
        let cfg = SwayConfig {
            window_len: 3,
            ..SwayConfig::default()
        };
        let mut tracker = SwayTracker::new(cfg).unwrap();
        let pts = [
            Vector2::new(0.0, 0.0),
            Vector2::new(1.0, 0.0),
            Vector2::new(0.0, 1.0),
            Vector2::new(1.0, 1.0),
        ];
        let out: Vec<_> = stream(&pts).iter().filter_map(|p| tracker.push(p).unwrap()).collect();
        assert_eq!(out.len(), 2);
        assert_eq!(out[0].delta_sigma_z, 0.0);
        let expected = (out[1].sigma_z - out[0].sigma_z) / TICK_SECONDS;
        assert!(close(out[1].delta_sigma_z, expected, 1e-12));
        // 2.0 -> 2.5 over one tick.
        assert!(close((2.5 - 2.0) / TICK_SECONDS, 10.0, 1e-12));
    }

    #[test]
    fn tilt_examples() {
        let ident: Vec<_> = (0..5).map(|k| (Timestamp::from_tick(k), UnitQuaternion::identity())).collect();
        assert!(torso_tilt_series(&ident, TICK_SECONDS)
            .iter()
            .all(|s| s.theta_z == 0.0 && s.delta_theta_z == 0.0));

        let pitch = UnitQuaternion::from_axis_angle(Vector3::y(), 30f64.to_radians());
        let s = torso_tilt_series(&[(Timestamp::ZERO, pitch), (Timestamp::from_tick(1), pitch)], TICK_SECONDS);
        assert!(close(s[1].theta_z, std::f64::consts::FRAC_PI_6, 1e-6));
        assert!(close(s[1].delta_theta_z, 0.0, 1e-12));

        let tilted = UnitQuaternion::from_axis_angle(Vector3::x(), 10f64.to_radians());
        let s = torso_tilt_series(
            &[(Timestamp::ZERO, UnitQuaternion::identity()), (Timestamp::from_tick(1), tilted)],
            TICK_SECONDS,
        );
        assert!(close(s[1].delta_theta_z, 3.49066, 1e-5));
    }

    /// E[sqrt(det S)] for S the unbiased sample covariance of `n` standard
    /// bivariate normal points: det((n-1) S) is distributed as
    /// chi2(n-1) * chi2(n-2), so E[sqrt det S] = E[chi(n-1)] E[chi(n-2)] / (n-1).
    fn expected_sqrt_det(n: usize) -> f64 {
        use statrs::function::gamma::ln_gamma;
        let mean_chi = |k: f64| 2f64.sqrt() * (ln_gamma((k + 1.0) / 2.0) - ln_gamma(k / 2.0)).exp();
        let k = (n - 1) as f64;
        mean_chi(k) * mean_chi(k - 1.0) / k
    }

    #[test]
    fn iid_gaussian_series_matches_wishart_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n_windows = 100_000;
        let pts: Vec<Vector2<f64>> = (0..n_windows + 49)
            .map(|_| Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)))
            .collect();
        let s = sway_series(&stream(&pts), SwayConfig::default()).unwrap();
        assert_eq!(s.len(), n_windows);
        let mean = s.iter().map(|x| x.sigma_z).sum::<f64>() / n_windows as f64;
        let oracle = PI * CHI2_95_2DOF * expected_sqrt_det(50);
        assert!((mean - oracle).abs() / oracle < 0.01, "mean {mean} vs oracle {oracle}");
        assert!(oracle > 18.0 && oracle < 18.8213);
    }

    #[test]
    fn single_outlier_jump_shrinks_with_window() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let base: Vec<Vector2<f64>> = (0..100)
            .map(|_| Vector2::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng)) * 0.02)
            .collect();
        let outlier = Vector2::new(0.3, 0.1);
        let jumps: Vec<f64> = [10, 25, 50, 100]
            .iter()
            .map(|&w| {
                let window = &base[100 - w..];
                let before = fit_ellipse(window).unwrap().area;
                let mut shifted = window[1..].to_vec();
                shifted.push(outlier);
                let after = fit_ellipse(&shifted).unwrap().area;
                (after - before).abs()
            })
            .collect();
        assert!(jumps.windows(2).all(|w| w[1] < w[0]), "jumps {jumps:?}");
    }

    #[test]
    fn constant_sigma_has_zero_delta() {
        // A rigidly repeating pattern whose period divides the window keeps
        // the window contents a permutation of the same set.
        let pattern = [
            Vector2::new(0.01, 0.0),
            Vector2::new(0.0, 0.02),
            Vector2::new(-0.01, 0.0),
            Vector2::new(0.0, -0.02),
            Vector2::new(0.005, 0.005),
        ];
        let pts: Vec<_> = (0..200).map(|k| pattern[k % 5]).collect();
        let s = sway_series(&stream(&pts), SwayConfig::default()).unwrap();
        assert!(s.iter().all(|x| x.delta_sigma_z.abs() < 1e-9));
    }

    fn arb_points() -> impl Strategy<Value = Vec<Vector2<f64>>> {
        proptest::collection::vec((-1.0..1.0f64, -1.0..1.0f64), 3..60)
            .prop_map(|v| v.into_iter().map(|(x, y)| Vector2::new(x, y)).collect())
    }

    proptest! {
        #[test]
        fn area_is_rotation_invariant(pts in arb_points(), angle in -PI..PI) {
            let rot = nalgebra::Rotation2::new(angle);
            let rotated: Vec<_> = pts.iter().map(|p| rot * p).collect();
            let a = fit_ellipse(&pts).unwrap().area;
            let b = fit_ellipse(&rotated).unwrap().area;
            prop_assert!((a - b).abs() <= 1e-9 * a.max(1e-12));
        }

        #[test]
        fn area_scales_quadratically(pts in arb_points(), s in 0.01..100.0f64) {
            let scaled: Vec<_> = pts.iter().map(|p| p * s).collect();
            let a = fit_ellipse(&pts).unwrap().area;
            let b = fit_ellipse(&scaled).unwrap().area;
            prop_assert!((b - s * s * a).abs() <= 1e-9 * (s * s * a).max(1e-12));
        }

        #[test]
        fn gaussian_is_rotation_equivariant(pts in arb_points(), angle in -PI..PI) {
            let rot = nalgebra::Rotation2::new(angle);
            let rotated: Vec<_> = pts.iter().map(|p| rot * p).collect();
            let g0 = fit_gaussian(&pts).unwrap();
            let g1 = fit_gaussian(&rotated).unwrap();
            let r = rot.into_inner();
            prop_assert!((g1.mean - r * g0.mean).norm() < 1e-12);
            prop_assert!((g1.cov - r * g0.cov * r.transpose()).norm() < 1e-12);
        }

        #[test]
        fn area_matches_determinant_form(a in 0.0..10.0f64, c in 0.0..10.0f64, t in -1.0..1.0f64) {
            let b = t * (a * c).sqrt();
            let cov = Matrix2::new(a, b, b, c);
            let e = ellipse_from_cov(Vector2::zeros(), cov).unwrap();
            let det = (a * c - b * b).max(0.0);
            let expected = PI * CHI2_95_2DOF * det.sqrt();
            prop_assert!((e.area - expected).abs() <= 1e-9 * expected.max(1e-9));
            prop_assert!(e.axes.0 >= e.axes.1 && e.axes.1 >= 0.0);
        }
    }
}
