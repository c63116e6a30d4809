//! The moments diagram.
//!
//! Each window is placed at `(s, k) = (skewness², kurtosis)`. Distribution
//! families occupy fixed landmarks on this plane: the normal at `(0, 3)`,
//! the uniform at `(0, 1.8)`, the gamma family on the line `k = 3 + 1.5 s`
//! (the exponential at `(4, 9)`), the Weibull family on a curve through the
//! exponential, and the region `k < 1 + s` is unreachable by any sample.
//!
//! Two distances summarize where a window sits: `metric1` from the normal
//! landmark and `metric2` from the uniform one.

use std::sync::OnceLock;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::stats::{BootstrapCloud, Moments, SampleWindow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlaneError {
    #[error("moments are degenerate; the point is undefined")]
    DegenerateMoments,
    #[error("Weibull shape must be positive, got {0}")]
    NonPositiveShape(f64),
    #[error("need at least {needed} points, got {got}")]
    TooFewPoints { needed: usize, got: usize },
    #[error("every window is degenerate")]
    AllWindowsDegenerate,
}

pub type Result<T, E = PlaneError> = std::result::Result<T, E>;

pub const NORMAL: (f64, f64) = (0.0, 3.0);
pub const UNIFORM: (f64, f64) = (0.0, 1.8);
pub const EXPONENTIAL: (f64, f64) = (4.0, 9.0);

/// Kurtosis on the gamma line at squared skewness `s`.
pub fn gamma_line(s: f64) -> f64 {
    3.0 + 1.5 * s
}

/// Lower feasibility bound of the plane at squared skewness `s`.
pub fn limit_line(s: f64) -> f64 {
    1.0 + s
}

/// A window's position on the moments diagram.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlanePoint {
    pub s: f64,
    pub k: f64,
    pub t_mid_ms: u64,
}

impl PlanePoint {
    pub fn new(s: f64, k: f64, t_mid_ms: u64) -> Self {
        PlanePoint { s, k, t_mid_ms }
    }
}

pub fn to_plane(m: &Moments, t_mid_ms: u64) -> Result<PlanePoint> {
    if !(m.std > 0.0 && m.skewness.is_finite() && m.kurtosis.is_finite()) {
        return Err(PlaneError::DegenerateMoments);
    }
    Ok(PlanePoint {
        s: m.skewness * m.skewness,
        k: m.kurtosis,
        t_mid_ms,
    })
}

/// Distance from the normal landmark `(0, 3)`.
pub fn metric1(p: &PlanePoint) -> f64 {
    (p.s - NORMAL.0).hypot(p.k - NORMAL.1)
}

/// Distance from the uniform landmark `(0, 1.8)`.
pub fn metric2(p: &PlanePoint) -> f64 {
    (p.s - UNIFORM.0).hypot(p.k - UNIFORM.1)
}

/// `(skewness², kurtosis)` of the Weibull distribution with shape `c`,
/// from the raw moments `Γ(1 + r/c)`.
pub fn weibull_landmark(c: f64) -> Result<(f64, f64)> {
    if !(c > 0.0) || !c.is_finite() {
        return Err(PlaneError::NonPositiveShape(c));
    }
    let mu: [f64; 5] = std::array::from_fn(|r| gamma(1.0 + r as f64 / c));
    let var = mu[2] - mu[1] * mu[1];
    let m3 = mu[3] - 3.0 * mu[1] * mu[2] + 2.0 * mu[1].powi(3);
    let m4 = mu[4] - 4.0 * mu[1] * mu[3] + 6.0 * mu[1] * mu[1] * mu[2] - 3.0 * mu[1].powi(4);
    let skew = m3 / var.powf(1.5);
    Ok((skew * skew, m4 / (var * var)))
}

/// A sample of the Weibull curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeibullPoint {
    pub c: f64,
    pub s: f64,
    pub k: f64,
}

/// Precomputed landmark geometry of the plane.
#[derive(Debug, Clone, PartialEq)]
pub struct Landmarks {
    pub weibull_curve: Vec<WeibullPoint>,
}

pub const WEIBULL_SHAPE_MIN: f64 = 0.5;
pub const WEIBULL_SHAPE_MAX: f64 = 10.0;
pub const WEIBULL_GRID: usize = 200;

impl Landmarks {
    pub fn new() -> Self {
        let (lo, hi) = (WEIBULL_SHAPE_MIN.ln(), WEIBULL_SHAPE_MAX.ln());
        let step = (hi - lo) / (WEIBULL_GRID - 1) as f64;
        let weibull_curve = (0..WEIBULL_GRID)
            .map(|i| {
                let c = (lo + step * i as f64).exp();
                let (s, k) = weibull_landmark(c).expect("grid shapes are positive");
                WeibullPoint { c, s, k }
            })
            .collect();
        Landmarks { weibull_curve }
    }

    /// Shared instance; the grid is computed once.
    pub fn shared() -> &'static Landmarks {
        static LANDMARKS: OnceLock<Landmarks> = OnceLock::new();
        LANDMARKS.get_or_init(Landmarks::new)
    }

    /// Shortest distance from `(s, k)` to the Weibull polyline.
    pub fn weibull_distance(&self, s: f64, k: f64) -> f64 {
        self.weibull_curve
            .windows(2)
            .map(|seg| segment_distance((s, k), (seg[0].s, seg[0].k), (seg[1].s, seg[1].k)))
            .fold(f64::INFINITY, f64::min)
    }
}

impl Default for Landmarks {
    fn default() -> Self {
        Landmarks::new()
    }
}

fn segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (dx, dy) = (b.0 - a.0, b.1 - a.1);
    let len2 = dx * dx + dy * dy;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * dx + (p.1 - a.1) * dy) / len2).clamp(0.0, 1.0)
    };
    (p.0 - (a.0 + t * dx)).hypot(p.1 - (a.1 + t * dy))
}

/// Region of the plane a point falls in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Zone {
    NormalVicinity,
    UniformVicinity,
    BetaZone,
    WeibullBand,
    GammaLine,
    Infeasible,
    Other,
}

impl Zone {
    pub fn as_str(self) -> &'static str {
        match self {
            Zone::NormalVicinity => "normal_vicinity",
            Zone::UniformVicinity => "uniform_vicinity",
            Zone::BetaZone => "beta_zone",
            Zone::WeibullBand => "weibull_band",
            Zone::GammaLine => "gamma_line",
            Zone::Infeasible => "infeasible",
            Zone::Other => "other",
        }
    }
}

/// Thresholds for [`classify_zone`]: `radius` around the point landmarks and
/// `band` half-width around lines and curves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ZoneParams {
    pub radius: f64,
    pub band: f64,
}

impl Default for ZoneParams {
    fn default() -> Self {
        ZoneParams {
            radius: 0.3,
            band: 0.15,
        }
    }
}

/// Assigns a zone; the first matching rule wins:
///
/// 1. `infeasible` if `k < 1 + s - band`
/// 2. `normal_vicinity` if `metric1 <= radius`
/// 3. `uniform_vicinity` if `metric2 <= radius`
/// 4. `gamma_line` if `|k - (3 + 1.5 s)| <= band`
/// 5. `weibull_band` if the Weibull curve is within `band`
/// 6. `beta_zone` if `1 + s <= k <= 3 + 1.5 s`
/// 7. `other`
///
/// The gamma line is tested before the Weibull band because both pass
/// through the exponential landmark.
pub fn classify_zone(p: &PlanePoint, params: ZoneParams) -> Zone {
    classify_with(Landmarks::shared(), p, params)
}

pub fn classify_with(landmarks: &Landmarks, p: &PlanePoint, params: ZoneParams) -> Zone {
    let ZoneParams { radius, band } = params;
    if p.k < limit_line(p.s) - band {
        Zone::Infeasible
    } else if metric1(p) <= radius {
        Zone::NormalVicinity
    } else if metric2(p) <= radius {
        Zone::UniformVicinity
    } else if (p.k - gamma_line(p.s)).abs() <= band {
        Zone::GammaLine
    } else if landmarks.weibull_distance(p.s, p.k) <= band {
        Zone::WeibullBand
    } else if limit_line(p.s) <= p.k && p.k <= gamma_line(p.s) {
        Zone::BetaZone
    } else {
        Zone::Other
    }
}

/// A labelled instant along a trajectory, e.g. `S` (exercise start) or `E`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseMark {
    pub t_ms: u64,
    pub label: String,
}

/// Time-ordered plane points with phase annotations.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub points: Vec<PlanePoint>,
    pub phase_marks: Vec<PhaseMark>,
}

impl Trajectory {
    /// Plane points of the non-degenerate windows, in window order.
    pub fn from_windows(windows: &[SampleWindow], phase_marks: Vec<PhaseMark>) -> Self {
        let points = windows
            .iter()
            .filter_map(|w| w.moments.as_ref().and_then(|m| to_plane(m, w.t_mid_ms()).ok()))
            .collect();
        Trajectory {
            points,
            phase_marks,
        }
    }
}

/// Discrete curvature at each interior point, from the circle through each
/// consecutive triple: `κ = 4·area / (|a||b||c|)`. Collinear or repeated
/// points give 0.
pub fn curvature_profile(traj: &Trajectory) -> Result<Vec<(u64, f64)>> {
    let pts = &traj.points;
    if pts.len() < 3 {
        return Err(PlaneError::TooFewPoints {
            needed: 3,
            got: pts.len(),
        });
    }
    Ok(pts
        .windows(3)
        .map(|w| (w[1].t_mid_ms, triple_curvature(&w[0], &w[1], &w[2])))
        .collect())
}

fn triple_curvature(p: &PlanePoint, q: &PlanePoint, r: &PlanePoint) -> f64 {
    let a = (q.s - p.s).hypot(q.k - p.k);
    let b = (r.s - q.s).hypot(r.k - q.k);
    let c = (r.s - p.s).hypot(r.k - p.k);
    let cross = (q.s - p.s) * (r.k - p.k) - (q.k - p.k) * (r.s - p.s);
    let denom = a * b * c;
    if denom == 0.0 {
        return 0.0;
    }
    // 4 · area = 2 · |cross|
    2.0 * cross.abs() / denom
}

/// Metrics of one window; `None` marks a degenerate window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSample {
    pub t_mid_ms: u64,
    pub metrics: Option<(f64, f64)>,
}

/// `(metric1, metric2)` per window, in window order.
pub fn metric_series(windows: &[SampleWindow]) -> Result<Vec<MetricSample>> {
    let out: Vec<MetricSample> = windows
        .iter()
        .map(|w| MetricSample {
            t_mid_ms: w.t_mid_ms(),
            metrics: w
                .moments
                .as_ref()
                .and_then(|m| to_plane(m, w.t_mid_ms()).ok())
                .map(|p| (metric1(&p), metric2(&p))),
        })
        .collect();
    if out.iter().all(|m| m.metrics.is_none()) {
        return Err(PlaneError::AllWindowsDegenerate);
    }
    Ok(out)
}

// ---- JSON export -------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Coord {
    pub s: f64,
    pub k: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Line {
    pub intercept: f64,
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LandmarksExport {
    pub normal: Coord,
    pub uniform: Coord,
    pub exponential: Coord,
    pub gamma_line: Line,
    pub limit_line: Line,
    pub weibull_curve: Vec<WeibullPoint>,
}

impl From<&Landmarks> for LandmarksExport {
    fn from(l: &Landmarks) -> Self {
        let coord = |(s, k): (f64, f64)| Coord { s, k };
        LandmarksExport {
            normal: coord(NORMAL),
            uniform: coord(UNIFORM),
            exponential: coord(EXPONENTIAL),
            gamma_line: Line {
                intercept: 3.0,
                slope: 1.5,
            },
            limit_line: Line {
                intercept: 1.0,
                slope: 1.0,
            },
            weibull_curve: l.weibull_curve.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointExport {
    pub t_mid_ms: u64,
    pub s: f64,
    pub k: f64,
    pub zone: Zone,
    pub metric1: f64,
    pub metric2: f64,
}

/// Plot-ready description of a trajectory on the moments diagram.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneExport {
    pub landmarks: LandmarksExport,
    pub points: Vec<PointExport>,
    pub bootstrap_cloud: Vec<Coord>,
    pub phase_marks: Vec<PhaseMark>,
}

impl PlaneExport {
    pub fn build(traj: &Trajectory, cloud: Option<&BootstrapCloud>, params: ZoneParams) -> Self {
        let landmarks = Landmarks::shared();
        PlaneExport {
            landmarks: landmarks.into(),
            points: traj
                .points
                .iter()
                .map(|p| PointExport {
                    t_mid_ms: p.t_mid_ms,
                    s: p.s,
                    k: p.k,
                    zone: classify_with(landmarks, p, params),
                    metric1: metric1(p),
                    metric2: metric2(p),
                })
                .collect(),
            bootstrap_cloud: cloud
                .map(|c| {
                    c.points
                        .iter()
                        .map(|m| Coord {
                            s: m.skewness * m.skewness,
                            k: m.kurtosis,
                        })
                        .collect()
                })
                .unwrap_or_default(),
            phase_marks: traj.phase_marks.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pt(s: f64, k: f64) -> PlanePoint {
        PlanePoint::new(s, k, 0)
    }

    fn moments(skewness: f64, kurtosis: f64) -> Moments {
        Moments {
            n: 100,
            mean: 0.0,
            std: 1.0,
            skewness,
            kurtosis,
        }
    }

    #[test]
    fn plane_coordinates() {
        assert_eq!(to_plane(&moments(0.0, 3.0), 5).unwrap(), PlanePoint::new(0.0, 3.0, 5));
        assert_eq!(to_plane(&moments(-2.0, 9.0), 5).unwrap(), PlanePoint::new(4.0, 9.0, 5));
        let mut flat = moments(0.0, 3.0);
        flat.std = 0.0;
        assert_eq!(to_plane(&flat, 0), Err(PlaneError::DegenerateMoments));
    }

    #[test]
    fn metric_landmarks() {
        assert_eq!(metric1(&pt(0.0, 3.0)), 0.0);
        assert!((metric2(&pt(0.0, 3.0)) - 1.2).abs() < 1e-15);
        assert_eq!(metric2(&pt(0.0, 1.8)), 0.0);
        assert!((metric1(&pt(0.0, 1.8)) - 1.2).abs() < 1e-15);
        assert!((metric1(&pt(4.0, 9.0)) - 52f64.sqrt()).abs() < 1e-15);
    }

    /// Bisection root of the Weibull skewness, independent of the grid.
    fn zero_skew_shape() -> f64 {
        let skew = |c: f64| {
            let mu: Vec<f64> = (0..4).map(|r| gamma(1.0 + r as f64 / c)).collect();
            mu[3] - 3.0 * mu[1] * mu[2] + 2.0 * mu[1].powi(3)
        };
        let (mut lo, mut hi) = (2.0, 5.0);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if skew(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn weibull_shapes() {
        let (s, k) = weibull_landmark(1.0).unwrap();
        assert!((s - 4.0).abs() < 1e-9 && (k - 9.0).abs() < 1e-9, "{s} {k}");

        let c0 = zero_skew_shape();
        assert!((c0 - 3.602_349).abs() < 1e-5, "{c0}");
        assert!(weibull_landmark(c0).unwrap().0 < 1e-12);

        // Rayleigh: skewness 2√π(π-3)/(4-π)^1.5, kurtosis (32-3π²)/(4-π)²
        let pi = std::f64::consts::PI;
        let g1 = 2.0 * pi.sqrt() * (pi - 3.0) / (4.0 - pi).powf(1.5);
        let g2 = (32.0 - 3.0 * pi * pi) / (4.0 - pi).powi(2);
        assert!((g1 - 0.631_110_6).abs() < 1e-6);
        let (s, k) = weibull_landmark(2.0).unwrap();
        assert!((s - g1 * g1).abs() < 1e-9 && (k - g2).abs() < 1e-9);
        assert!((s - 0.398).abs() < 1e-3 && (k - 3.245).abs() < 1e-3);

        assert_eq!(weibull_landmark(0.0), Err(PlaneError::NonPositiveShape(0.0)));
        assert!(weibull_landmark(-1.0).is_err());
    }

    #[test]
    fn weibull_grid() {
        let l = Landmarks::shared();
        assert_eq!(l.weibull_curve.len(), WEIBULL_GRID);
        assert!((l.weibull_curve[0].c - 0.5).abs() < 1e-12);
        assert!((l.weibull_curve[WEIBULL_GRID - 1].c - 10.0).abs() < 1e-9);
        assert!(l.weibull_curve.windows(2).all(|w| w[0].c < w[1].c));
        assert!(l.weibull_curve.iter().all(|p| p.k >= limit_line(p.s) - 1e-9));
        assert!(l.weibull_distance(4.0, 9.0) < 1e-3);
    }

    #[test]
    fn zones() {
        let z = |s, k| classify_zone(&pt(s, k), ZoneParams::default());
        assert_eq!(z(0.0, 3.0), Zone::NormalVicinity);
        assert_eq!(z(0.0, 1.8), Zone::UniformVicinity);
        assert_eq!(z(0.0, 15.0 / 7.0), Zone::BetaZone);
        assert_eq!(z(4.0, 9.0), Zone::GammaLine);
        assert_eq!(z(2.0, 2.0), Zone::Infeasible);
        let (s, k) = weibull_landmark(2.0).unwrap();
        assert_eq!(z(s, k), Zone::WeibullBand);
        assert_eq!(z(1.0, 8.0), Zone::Other);
    }

    #[test]
    fn curvature_basics() {
        let line = Trajectory {
            points: vec![pt(0.0, 0.0), pt(1.0, 1.0), pt(2.0, 2.0)],
            ..Default::default()
        };
        assert_eq!(curvature_profile(&line).unwrap()[0].1, 0.0);

        let circle = Trajectory {
            points: (0..12)
                .map(|i| {
                    let a = i as f64 * 0.4;
                    PlanePoint::new(2.0 * a.cos(), 2.0 * a.sin(), i)
                })
                .collect(),
            ..Default::default()
        };
        let prof = curvature_profile(&circle).unwrap();
        assert_eq!(prof.len(), 10);
        assert!(prof.iter().all(|(_, k)| (k - 0.5).abs() < 1e-6));
        assert_eq!(prof[0].0, 1);

        let short = Trajectory {
            points: vec![pt(0.0, 0.0), pt(1.0, 1.0)],
            ..Default::default()
        };
        assert_eq!(
            curvature_profile(&short),
            Err(PlaneError::TooFewPoints { needed: 3, got: 2 })
        );
    }

    #[test]
    fn noisy_circle_mean_curvature() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        let n = 100;
        let points = (0..n)
            .map(|i| {
                let a = std::f64::consts::TAU * i as f64 / n as f64;
                let (dx, dy): (f64, f64) = (rng.random_range(-1e-4..1e-4), rng.random_range(-1e-4..1e-4));
                PlanePoint::new(a.cos() + dx, a.sin() + dy, i as u64)
            })
            .collect();
        let prof = curvature_profile(&Trajectory { points, ..Default::default() }).unwrap();
        let mean = prof.iter().map(|(_, k)| k).sum::<f64>() / prof.len() as f64;
        assert!((mean - 1.0).abs() < 0.01, "{mean}");
    }

    #[test]
    fn metric_series_markers() {
        let w = |start: usize, m: Option<Moments>| SampleWindow {
            start_index: start,
            length: 4,
            t_start_ms: start as u64 * 10,
            t_end_ms: start as u64 * 10 + 30,
            mean: 0.0,
            std: 1.0,
            moments: m,
        };
        let s = metric_series(&[w(0, Some(moments(0.0, 3.0)))]).unwrap();
        assert_eq!(s[0].t_mid_ms, 15);
        let (m1, m2) = s[0].metrics.unwrap();
        assert_eq!(m1, 0.0);
        assert!((m2 - 1.2).abs() < 1e-15);

        let s = metric_series(&[w(0, None), w(1, Some(moments(0.0, 1.8)))]).unwrap();
        assert!(s[0].metrics.is_none());
        assert_eq!(
            metric_series(&[w(0, None), w(1, None)]),
            Err(PlaneError::AllWindowsDegenerate)
        );
        assert_eq!(metric_series(&[]), Err(PlaneError::AllWindowsDegenerate));
    }

    #[test]
    fn export_shape() {
        let traj = Trajectory {
            points: vec![pt(0.0, 3.0)],
            phase_marks: vec![PhaseMark { t_ms: 0, label: "S".into() }],
        };
        let json = serde_json::to_value(PlaneExport::build(&traj, None, ZoneParams::default())).unwrap();
        assert_eq!(json["points"][0]["zone"], "normal_vicinity");
        assert_eq!(json["landmarks"]["normal"]["k"], 3.0);
        assert_eq!(json["landmarks"]["weibull_curve"].as_array().unwrap().len(), WEIBULL_GRID);
        assert_eq!(json["phase_marks"][0]["label"], "S");
    }

    proptest! {
        #[test]
        fn metrics_non_negative(s in 0.0f64..50.0, k in 0.0f64..100.0) {
            prop_assert!(metric1(&pt(s, k)) >= 0.0);
            prop_assert!(metric2(&pt(s, k)) >= 0.0);
        }

        #[test]
        fn classification_is_deterministic(s in 0.0f64..20.0, k in 0.0f64..40.0) {
            let p = pt(s, k);
            let z = classify_zone(&p, ZoneParams::default());
            prop_assert_eq!(z, classify_zone(&p, ZoneParams::default()));
        }

        #[test]
        fn curvature_rigid_motion(
            coords in prop::collection::vec((-10.0f64..10.0, -10.0f64..10.0), 3..20),
            angle in 0.0f64..std::f64::consts::TAU,
            tx in -50.0f64..50.0,
            ty in -50.0f64..50.0,
        ) {
            let (sin, cos) = angle.sin_cos();
            let a = Trajectory { points: coords.iter().map(|&(x, y)| pt(x, y)).collect(), ..Default::default() };
            let b = Trajectory {
                points: coords.iter().map(|&(x, y)| pt(cos * x - sin * y + tx, sin * x + cos * y + ty)).collect(),
                ..Default::default()
            };
            let (ka, kb) = (curvature_profile(&a).unwrap(), curvature_profile(&b).unwrap());
            for ((_, x), (_, y)) in ka.iter().zip(&kb) {
                prop_assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{x} vs {y}");
            }
        }
    }
}
