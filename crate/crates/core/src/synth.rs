//! Deterministic synthetic heartbeat, accelerometer and session data.
//!
//! The generators are built so that windowed heartbeat trajectories show the
//! qualitative load/recovery shapes on the moments plane: symmetric scatter
//! at rest, a mean drop with left-skewed scatter under load, and a relaxation
//! with right-skewed scatter fading to symmetric during recovery.
//!
//! Heartbeat noise is drawn from low-discrepancy (golden-ratio and
//! silver-ratio Kronecker) sequences with seeded offsets rather than from
//! independent draws. Window moments therefore track the intended shape
//! closely even for windows of a few dozen beats, which keeps the
//! trajectory shapes stable across seeds.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal as StdNormal};

use crate::features::spearman;
use crate::ingest::{self, AccelSample, Activity, MagnitudeSeries, RrSample, SessionMeta, SessionRecord};
use crate::momentplane::{metric1, to_plane, PhaseMark};
use crate::stats::{self, SampleWindow, StatsError};

#[derive(Debug, thiserror::Error)]
pub enum SynthError {
    #[error("invalid protocol: {0}")]
    InvalidProtocol(String),
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("unknown activity class {0:?} (expected passive, moderate or active)")]
    UnknownClass(String),
    #[error("duration must be positive, got {0} s")]
    InvalidDuration(f64),
    #[error("need at least one session per class")]
    NoSessions,
    #[error("cannot write {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

pub type Result<T, E = SynthError> = std::result::Result<T, E>;

const GRAVITY: f64 = 9.81;
const ACCEL_HZ: f64 = 50.0;
const RR_FLOOR_MS: f64 = 250.0;
const GOLDEN: f64 = 0.618_033_988_749_894_9;
const SILVER: f64 = std::f64::consts::SQRT_2 - 1.0;
/// Shape of the Beta(a, 1) variable behind the skewed noise component.
const SKEW_SHAPE: f64 = 8.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Rest,
    Load,
    Recovery,
}

impl Phase {
    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Rest => "rest",
            Phase::Load => "load",
            Phase::Recovery => "recovery",
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Segment {
    pub phase: Phase,
    pub duration_s: f64,
    pub intensity: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub segments: Vec<Segment>,
}

impl Protocol {
    pub fn new(segments: Vec<Segment>) -> Result<Self> {
        let p = Protocol { segments };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if self.segments.is_empty() {
            return Err(SynthError::InvalidProtocol("no segments".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration_s.is_finite() && s.duration_s > 0.0) {
                return Err(SynthError::InvalidProtocol(format!(
                    "segment {i} has duration {} s",
                    s.duration_s
                )));
            }
            if !(0.0..=1.0).contains(&s.intensity) {
                return Err(SynthError::InvalidProtocol(format!(
                    "segment {i} intensity {} outside [0, 1]",
                    s.intensity
                )));
            }
        }
        Ok(())
    }

    fn seg(phase: Phase, duration_s: f64, intensity: f64) -> Segment {
        Segment { phase, duration_s, intensity }
    }

    /// One minute of rest, 207 s of stair climbing at intensity 0.8, five
    /// minutes of recovery.
    pub fn staircase() -> Self {
        Protocol {
            segments: vec![
                Self::seg(Phase::Rest, 60.0, 0.0),
                Self::seg(Phase::Load, 207.0, 0.8),
                Self::seg(Phase::Recovery, 300.0, 0.0),
            ],
        }
    }

    pub fn rest(duration_s: f64) -> Self {
        Protocol { segments: vec![Self::seg(Phase::Rest, duration_s, 0.0)] }
    }

    /// One minute of rest, two minutes of lifting, three of recovery.
    ///
    /// Weight maps to intensity as `min(0.2 + 0.2·kg, 0.95)`, which is an
    /// arbitrary monotone choice: 0.5 kg → 0.3, 1 kg → 0.4, 3 kg → 0.8.
    pub fn dumbbell(weight_kg: f64) -> Self {
        let intensity = (0.2 + 0.2 * weight_kg).clamp(0.0, 0.95);
        Protocol {
            segments: vec![
                Self::seg(Phase::Rest, 60.0, 0.0),
                Self::seg(Phase::Load, 120.0, intensity),
                Self::seg(Phase::Recovery, 180.0, 0.0),
            ],
        }
    }

    /// `staircase`, `rest` (300 s), `rest:<seconds>` or `dumbbell:<kg>`.
    pub fn preset(name: &str) -> Result<Self> {
        let bad = || SynthError::InvalidProtocol(format!("unknown preset {name:?}"));
        let (head, arg) = match name.split_once(':') {
            Some((h, a)) => (h, Some(a.parse::<f64>().map_err(|_| bad())?)),
            None => (name, None),
        };
        let p = match (head, arg) {
            ("staircase", None) => Self::staircase(),
            ("rest", None) => Self::rest(300.0),
            ("rest", Some(s)) => Self::rest(s),
            ("dumbbell", Some(kg)) if kg > 0.0 => Self::dumbbell(kg),
            _ => return Err(bad()),
        };
        p.validate()?;
        Ok(p)
    }

    pub fn total_duration_s(&self) -> f64 {
        self.segments.iter().map(|s| s.duration_s).sum()
    }

    /// A mark at the start of each segment, labelled with its phase.
    pub fn phase_marks(&self) -> Vec<PhaseMark> {
        self.boundaries()
            .into_iter()
            .map(|(phase, start, _)| PhaseMark {
                t_ms: (start * 1000.0).round() as u64,
                label: phase.as_str().to_string(),
            })
            .collect()
    }

    /// Start and end (seconds) of each segment.
    pub fn boundaries(&self) -> Vec<(Phase, f64, f64)> {
        let mut t = 0.0;
        self.segments
            .iter()
            .map(|s| {
                let b = (s.phase, t, t + s.duration_s);
                t += s.duration_s;
                b
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub seed: u64,
    pub baseline_rr_ms: f64,
    pub load_drop_ms: f64,
    pub noise_rest_ms: f64,
    pub skew_scale_load: f64,
    pub recovery_tau_s: f64,
    /// Time constant of the heartbeat drop at load onset.
    pub load_ramp_tau_s: f64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            baseline_rr_ms: 850.0,
            load_drop_ms: 350.0,
            noise_rest_ms: 25.0,
            skew_scale_load: 80.0,
            recovery_tau_s: 90.0,
            load_ramp_tau_s: 20.0,
        }
    }
}

impl GenConfig {
    pub fn with_seed(seed: u64) -> Self {
        GenConfig { seed, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("baseline_rr_ms", self.baseline_rr_ms),
            ("load_drop_ms", self.load_drop_ms),
            ("noise_rest_ms", self.noise_rest_ms),
            ("skew_scale_load", self.skew_scale_load),
            ("recovery_tau_s", self.recovery_tau_s),
            ("load_ramp_tau_s", self.load_ramp_tau_s),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(SynthError::InvalidConfig(format!("{name} must be positive, got {v}")));
            }
        }
        if self.load_drop_ms >= self.baseline_rr_ms {
            return Err(SynthError::InvalidConfig("load_drop_ms must be below baseline_rr_ms".into()));
        }
        Ok(())
    }
}

/// Heartbeat series for a protocol; see [`gen_rr_labeled`].
pub fn gen_rr(protocol: &Protocol, config: &GenConfig) -> Result<Vec<RrSample>> {
    Ok(gen_rr_labeled(protocol, config)?.into_iter().map(|(s, _)| s).collect())
}

/// Heartbeat series with the protocol phase each beat falls in.
///
/// The first beat is at t = 0 and each following timestamp adds the
/// previous interval. Within a segment, with `el` the elapsed seconds:
///
/// * rest: `baseline + noise·z`
/// * load: the mean falls from its entry level toward
///   `baseline − intensity·drop` with time constant `load_ramp_tau_s`, plus
///   left-skewed noise scaled by `skew_scale·intensity·(el/duration)^0.3`
/// * recovery: the mean relaxes to baseline with `recovery_tau_s`, plus
///   right-skewed noise fading with time constant `0.3·recovery_tau_s`
///
/// `z` is standard normal and the skewed term a standardized Beta(8, 1).
pub fn gen_rr_labeled(protocol: &Protocol, config: &GenConfig) -> Result<Vec<(RrSample, Phase)>> {
    protocol.validate()?;
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(1);
    let (u0, v0): (f64, f64) = (rng.random(), rng.random());
    let std_normal = StdNormal::new(0.0, 1.0).expect("unit normal");
    let a = SKEW_SHAPE;
    let beta_mean = a / (a + 1.0);
    let beta_sd = (a / ((a + 1.0).powi(2) * (a + 2.0))).sqrt();

    let base = config.baseline_rr_ms;
    let mut out = Vec::new();
    let mut t = 0.0f64;
    let mut idx = 0u64;
    let mut level = base;
    let mut skew_amp = 0.0;
    for seg in &protocol.segments {
        let t0 = t;
        let (entry_level, entry_skew) = (level, skew_amp);
        while t - t0 < seg.duration_s {
            let el = t - t0;
            idx += 1;
            let u = (u0 + idx as f64 * GOLDEN).fract().clamp(1e-12, 1.0 - 1e-12);
            let v = (v0 + idx as f64 * SILVER).fract();
            let z = std_normal.inverse_cdf(u);
            let x = (v.powf(1.0 / a) - beta_mean) / beta_sd;
            let noise = config.noise_rest_ms * z;
            let (mean, rr) = match seg.phase {
                Phase::Rest => (base, base + noise),
                Phase::Load => {
                    let target = base - seg.intensity * config.load_drop_ms;
                    let mean = target + (entry_level - target) * (-el / config.load_ramp_tau_s).exp();
                    skew_amp = config.skew_scale_load * seg.intensity * (el / seg.duration_s).powf(0.3);
                    (mean, mean + noise + skew_amp * x)
                }
                Phase::Recovery => {
                    let tau = config.recovery_tau_s;
                    let mean = base + (entry_level - base) * (-el / tau).exp();
                    let fade = entry_skew * (-el / (0.3 * tau)).exp();
                    (mean, mean + noise - fade * x)
                }
            };
            level = mean;
            let rr = rr.max(RR_FLOOR_MS);
            out.push((
                RrSample { t_ms: (t * 1000.0).round() as u64, rr_ms: rr },
                seg.phase,
            ));
            t += rr / 1000.0;
        }
        if seg.phase != Phase::Load {
            skew_amp = 0.0;
        }
    }
    Ok(out)
}

/// Phase summary of one analysis window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowPhase {
    /// Phase of the window's last beat; windows trail their end time.
    pub phase: Phase,
    /// Share of the window's beats generated under load.
    pub load_fraction: f64,
}

/// Labels windows cut from a [`gen_rr_labeled`] series.
pub fn window_phases(phases: &[Phase], windows: &[SampleWindow]) -> Vec<WindowPhase> {
    windows
        .iter()
        .map(|w| {
            let span = &phases[w.start_index..w.start_index + w.length];
            let load = span.iter().filter(|&&p| p == Phase::Load).count();
            WindowPhase {
                phase: span[span.len() - 1],
                load_fraction: load as f64 / span.len() as f64,
            }
        })
        .collect()
}

/// How a windowed metric1 series follows a load protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LoadResponse {
    pub windows: usize,
    /// Spearman correlation of metric1 with the windows' load fraction.
    pub spearman_load: Option<f64>,
    pub first_rest_metric1: Option<f64>,
    pub last_load_metric1: Option<f64>,
    /// Mean metric1 over windows ending in the last minute of load.
    pub final_load_minute: Option<f64>,
    /// Mean metric1 over windows ending in the last minute of the series.
    pub final_recovery_minute: Option<f64>,
}

/// Windows a labeled heartbeat series and summarizes metric1 against the
/// phases. Degenerate windows are skipped.
pub fn load_response(labeled: &[(RrSample, Phase)], window: usize, stride: usize) -> Result<LoadResponse, StatsError> {
    let samples: Vec<RrSample> = labeled.iter().map(|p| p.0).collect();
    let phases: Vec<Phase> = labeled.iter().map(|p| p.1).collect();
    let windows = stats::sliding_windows(&MagnitudeSeries::from_rr(&samples), window, stride)?;
    let labels = window_phases(&phases, &windows);
    let rows: Vec<(u64, f64, WindowPhase)> = windows
        .iter()
        .zip(labels)
        .filter_map(|(w, l)| {
            let p = to_plane(w.moments.as_ref()?, w.t_mid_ms()).ok()?;
            Some((w.t_end_ms, metric1(&p), l))
        })
        .collect();
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    let m1: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let frac: Vec<f64> = rows.iter().map(|r| r.2.load_fraction).collect();
    let load_end = labeled
        .iter()
        .filter(|p| p.1 == Phase::Load)
        .map(|p| p.0.t_ms)
        .max();
    let series_end = samples.last().map_or(0, |s| s.t_ms);
    let final_load = load_end.map(|end| {
        rows.iter()
            .filter(|r| r.2.phase == Phase::Load && r.0 + 60_000 > end)
            .map(|r| r.1)
            .collect::<Vec<_>>()
    });
    Ok(LoadResponse {
        windows: rows.len(),
        spearman_load: spearman(&m1, &frac),
        first_rest_metric1: rows.iter().find(|r| r.2.phase == Phase::Rest).map(|r| r.1),
        last_load_metric1: rows.iter().rev().find(|r| r.2.phase == Phase::Load).map(|r| r.1),
        final_load_minute: final_load.and_then(mean),
        final_recovery_minute: mean(
            rows.iter()
                .filter(|r| r.0 + 60_000 > series_end)
                .map(|r| r.1)
                .collect(),
        ),
    })
}

/// Activity-intensity groups of the accelerometer generator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntensityClass {
    Passive,
    Moderate,
    Active,
}

impl IntensityClass {
    pub const ALL: [IntensityClass; 3] = [IntensityClass::Passive, IntensityClass::Moderate, IntensityClass::Active];

    pub fn as_str(self) -> &'static str {
        match self {
            IntensityClass::Passive => "passive",
            IntensityClass::Moderate => "moderate",
            IntensityClass::Active => "active",
        }
    }
}

impl FromStr for IntensityClass {
    type Err = SynthError;

    fn from_str(s: &str) -> Result<Self> {
        IntensityClass::ALL
            .into_iter()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| SynthError::UnknownClass(s.to_string()))
    }
}

/// Oscillating component on the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Gait {
    noise: f64,
    freq_hz: f64,
    amplitude: f64,
}

fn gen_accel_with(gait: Gait, duration_s: f64, rng: &mut ChaCha8Rng) -> Result<Vec<AccelSample>> {
    if !(duration_s.is_finite() && duration_s > 0.0) {
        return Err(SynthError::InvalidDuration(duration_s));
    }
    let n = (duration_s * ACCEL_HZ).round().max(1.0) as u64;
    let noise = Normal::new(0.0, gait.noise).expect("positive noise");
    let phase = rng.random::<f64>() * std::f64::consts::TAU;
    Ok((0..n)
        .map(|i| {
            let t = i as f64 / ACCEL_HZ;
            let wave = gait.amplitude * (std::f64::consts::TAU * gait.freq_hz * t + phase).sin();
            AccelSample {
                t_ms: i * 20,
                ax: noise.sample(rng),
                ay: noise.sample(rng),
                az: GRAVITY + wave + noise.sample(rng),
            }
        })
        .collect())
}

/// 50 Hz tri-axial trace around gravity on the z axis.
///
/// Passive and moderate traces are white noise with std 0.05 and 0.3 m/s²;
/// active adds a 2 Hz, 2 m/s² oscillation on top of std-1.5 noise.
pub fn gen_accel(class: IntensityClass, duration_s: f64, config: &GenConfig) -> Result<Vec<AccelSample>> {
    let gait = match class {
        IntensityClass::Passive => Gait { noise: 0.05, freq_hz: 0.0, amplitude: 0.0 },
        IntensityClass::Moderate => Gait { noise: 0.3, freq_hz: 0.0, amplitude: 0.0 },
        IntensityClass::Active => Gait { noise: 1.5, freq_hz: 2.0, amplitude: 2.0 },
    };
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    rng.set_stream(2);
    gen_accel_with(gait, duration_s, &mut rng)
}

/// Per-activity generation ranges for [`gen_sessions`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActivityProfile {
    pub distance_km: (f64, f64),
    pub pace_min_per_km: (f64, f64),
    gait: Gait,
}

impl ActivityProfile {
    /// Pace bands do not overlap, so pace alone separates the classes.
    pub fn of(activity: Activity) -> Self {
        match activity {
            Activity::Walking => ActivityProfile {
                distance_km: (3.0, 6.0),
                pace_min_per_km: (10.0, 13.0),
                gait: Gait { noise: 1.0, freq_hz: 1.8, amplitude: 2.0 },
            },
            Activity::Running => ActivityProfile {
                distance_km: (5.0, 12.0),
                pace_min_per_km: (5.0, 6.5),
                gait: Gait { noise: 1.8, freq_hz: 2.8, amplitude: 5.0 },
            },
            Activity::Skiing => ActivityProfile {
                distance_km: (8.0, 20.0),
                pace_min_per_km: (3.5, 5.0),
                gait: Gait { noise: 1.2, freq_hz: 1.0, amplitude: 3.0 },
            },
        }
    }
}

/// Length of the stored accelerometer excerpt per session.
pub const SESSION_ACCEL_S: f64 = 60.0;
/// Length of the stored heartbeat excerpt per session.
pub const SESSION_RR_S: f64 = 180.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSession {
    pub meta: SessionMeta,
    pub accel: Vec<AccelSample>,
    pub rr: Vec<RrSample>,
}

impl SyntheticSession {
    pub fn accel_file(&self) -> PathBuf {
        Path::new("accel").join(format!("{}.csv", self.meta.session_id))
    }

    pub fn rr_file(&self) -> PathBuf {
        Path::new("rr").join(format!("{}.csv", self.meta.session_id))
    }
}

/// `n_per_class` sessions for each activity, in walking/running/skiing order.
///
/// Session `i` (counting across classes) draws everything from
/// `seed ^ i`: distance and pace uniformly from its class ranges, a
/// one-minute accelerometer excerpt with the class gait, and a heartbeat
/// excerpt under load whose intensity grows with velocity.
pub fn gen_sessions(n_per_class: usize, seed: u64) -> Result<Vec<SyntheticSession>> {
    if n_per_class == 0 {
        return Err(SynthError::NoSessions);
    }
    let mut sessions = Vec::with_capacity(3 * n_per_class);
    for (c, activity) in Activity::ALL.into_iter().enumerate() {
        let profile = ActivityProfile::of(activity);
        for i in 0..n_per_class {
            let index = (c * n_per_class + i) as u64;
            let session_seed = seed ^ index;
            let mut rng = ChaCha8Rng::seed_from_u64(session_seed);
            let distance = round_to(rng.random_range(profile.distance_km.0..profile.distance_km.1), 3);
            let pace = rng.random_range(profile.pace_min_per_km.0..profile.pace_min_per_km.1);
            let duration = round_to(distance * pace, 3);
            let velocity = 60.0 * distance / duration;
            let intensity = (0.25 + 0.035 * velocity + 0.001 * duration).min(0.95);

            let config = GenConfig::with_seed(session_seed);
            let protocol = Protocol {
                segments: vec![Segment { phase: Phase::Load, duration_s: SESSION_RR_S, intensity }],
            };
            let rr = gen_rr(&protocol, &config)?;
            let mut accel_rng = ChaCha8Rng::seed_from_u64(session_seed);
            accel_rng.set_stream(2);
            let accel = gen_accel_with(profile.gait, SESSION_ACCEL_S, &mut accel_rng)?;
            sessions.push(SyntheticSession {
                meta: SessionMeta {
                    session_id: format!("{}-{i:03}", activity.as_str()),
                    activity,
                    distance_km: distance,
                    duration_min: duration,
                },
                accel,
                rr,
            });
        }
    }
    Ok(sessions)
}

fn round_to(v: f64, digits: i32) -> f64 {
    let f = 10f64.powi(digits);
    (v * f).round() / f
}

/// Writes `sessions.csv` plus `accel/<id>.csv` and `rr/<id>.csv` under
/// `dir`. Returns every file written, sessions file first.
pub fn write_sessions(dir: &Path, sessions: &[SyntheticSession]) -> Result<Vec<PathBuf>> {
    let io = |path: &Path| {
        let path = path.to_path_buf();
        move |source| SynthError::Io { path, source }
    };
    for sub in ["accel", "rr"] {
        let d = dir.join(sub);
        std::fs::create_dir_all(&d).map_err(io(&d))?;
    }
    let mut written = Vec::with_capacity(1 + 2 * sessions.len());
    let records: Vec<SessionRecord> = sessions
        .iter()
        .map(|s| SessionRecord {
            meta: s.meta.clone(),
            accel_file: s.accel_file(),
            rr_file: s.rr_file(),
        })
        .collect();
    let index = dir.join("sessions.csv");
    let f = std::fs::File::create(&index).map_err(io(&index))?;
    ingest::write_sessions(std::io::BufWriter::new(f), &records).map_err(io(&index))?;
    written.push(index);
    for s in sessions {
        let p = dir.join(s.accel_file());
        let f = std::fs::File::create(&p).map_err(io(&p))?;
        ingest::write_accel(std::io::BufWriter::new(f), &s.accel).map_err(io(&p))?;
        written.push(p);
        let p = dir.join(s.rr_file());
        let f = std::fs::File::create(&p).map_err(io(&p))?;
        ingest::write_rr(std::io::BufWriter::new(f), &s.rr).map_err(io(&p))?;
        written.push(p);
    }
    Ok(written)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::accel_magnitude;
    use crate::stats::moments;

    #[test]
    fn protocol_validation() {
        assert!(Protocol::staircase().validate().is_ok());
        assert!((Protocol::staircase().total_duration_s() - 567.0).abs() < 1e-12);
        let zero = Protocol { segments: vec![Segment { phase: Phase::Rest, duration_s: 0.0, intensity: 0.0 }] };
        assert!(matches!(gen_rr(&zero, &GenConfig::default()), Err(SynthError::InvalidProtocol(_))));
        assert!(matches!(Protocol::preset("marathon"), Err(SynthError::InvalidProtocol(_))));
        assert_eq!(Protocol::preset("rest:120").unwrap(), Protocol::rest(120.0));
        assert!((Protocol::preset("dumbbell:3").unwrap().segments[1].intensity - 0.8).abs() < 1e-12);
        let cfg = GenConfig { load_drop_ms: 900.0, ..Default::default() };
        assert!(matches!(cfg.validate(), Err(SynthError::InvalidConfig(_))));
    }

    #[test]
    fn rr_series_is_valid_and_deterministic() {
        let cfg = GenConfig::with_seed(7);
        let a = gen_rr_labeled(&Protocol::staircase(), &cfg).unwrap();
        assert_eq!(a, gen_rr_labeled(&Protocol::staircase(), &cfg).unwrap());
        assert_ne!(a, gen_rr_labeled(&Protocol::staircase(), &GenConfig::with_seed(8)).unwrap());
        assert_eq!(a[0].0.t_ms, 0);
        assert!(a.windows(2).all(|w| w[1].0.t_ms > w[0].0.t_ms));
        assert!(a.iter().all(|(s, _)| s.rr_ms >= RR_FLOOR_MS && s.rr_ms.is_finite()));
        let last = a.last().unwrap().0.t_ms as f64 / 1000.0;
        assert!(last > 560.0 && last < 569.0, "{last}");
        let phases: Vec<Phase> = a.iter().map(|p| p.1).collect();
        assert_eq!(phases.first(), Some(&Phase::Rest));
        assert_eq!(phases.last(), Some(&Phase::Recovery));
    }

    #[test]
    fn load_lowers_the_interval_and_skews_left() {
        let a = gen_rr_labeled(&Protocol::staircase(), &GenConfig::with_seed(3)).unwrap();
        let load: Vec<f64> = a.iter().filter(|p| p.1 == Phase::Load).map(|p| p.0.rr_ms).collect();
        let rest: Vec<f64> = a.iter().filter(|p| p.1 == Phase::Rest).map(|p| p.0.rr_ms).collect();
        let tail = &load[load.len() - 80..];
        let m = moments(tail).unwrap();
        assert!(m.mean < moments(&rest).unwrap().mean - 200.0);
        assert!(m.skewness < -0.5, "{m:?}");
    }

    #[test]
    fn rest_windows_are_symmetric() {
        let rr = gen_rr(&Protocol::rest(600.0), &GenConfig::with_seed(1)).unwrap();
        let v: Vec<f64> = rr.iter().map(|s| s.rr_ms).collect();
        let mut ok = 0;
        let mut total = 0;
        for w in v.windows(300).step_by(30) {
            total += 1;
            ok += usize::from(moments(w).unwrap().skewness.abs() < 0.5);
        }
        assert!(ok * 10 >= total * 9, "{ok}/{total}");
    }

    #[test]
    fn accel_classes() {
        let cfg = GenConfig::with_seed(5);
        let passive = gen_accel(IntensityClass::Passive, 60.0, &cfg).unwrap();
        let active = gen_accel(IntensityClass::Active, 60.0, &cfg).unwrap();
        assert_eq!(passive.len(), 3000);
        assert_eq!(passive[1].t_ms, 20);
        let sp = moments(&accel_magnitude(&passive, false).unwrap().value).unwrap().std;
        let sa = moments(&accel_magnitude(&active, false).unwrap().value).unwrap().std;
        assert!(sp < 0.1, "{sp}");
        assert!(sa > 5.0 * sp, "{sa} vs {sp}");
        assert!(matches!(gen_accel(IntensityClass::Passive, 0.0, &cfg), Err(SynthError::InvalidDuration(_))));
        assert!(matches!("sleeping".parse::<IntensityClass>(), Err(SynthError::UnknownClass(_))));
    }

    #[test]
    fn sessions_follow_class_ranges() {
        let s = gen_sessions(20, 11).unwrap();
        assert_eq!(s.len(), 60);
        assert_eq!(s[0].meta.session_id, "walking-000");
        assert_eq!(s[59].meta.session_id, "skiing-019");
        for x in &s {
            let p = ActivityProfile::of(x.meta.activity);
            let pace = x.meta.duration_min / x.meta.distance_km;
            assert!(pace > p.pace_min_per_km.0 - 1e-3 && pace < p.pace_min_per_km.1 + 1e-3);
            assert!(x.meta.distance_km >= p.distance_km.0 && x.meta.distance_km <= p.distance_km.1);
            assert!(x.rr.windows(2).all(|w| w[1].t_ms > w[0].t_ms));
        }
        assert_eq!(s, gen_sessions(20, 11).unwrap());
        assert!(matches!(gen_sessions(0, 1), Err(SynthError::NoSessions)));
    }

    #[test]
    fn written_sessions_parse_back() {
        let dir = tempfile::tempdir().unwrap();
        let s = gen_sessions(1, 2).unwrap();
        let files = write_sessions(dir.path(), &s).unwrap();
        assert_eq!(files.len(), 7);
        let records = ingest::parse_sessions_csv(dir.path().join("sessions.csv")).unwrap();
        assert_eq!(records.len(), 3);
        for (r, x) in records.iter().zip(&s) {
            assert_eq!(r.meta, x.meta);
            assert_eq!(ingest::parse_rr_csv(&r.rr_file).unwrap(), x.rr);
            assert_eq!(ingest::parse_accel_csv(&r.accel_file).unwrap(), x.accel);
        }
    }
}
