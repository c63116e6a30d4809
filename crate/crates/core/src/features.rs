//! Per-session feature vectors and their correlation matrix.
//!
//! Objective features describe the workload (distance, duration, velocity,
//! pace, and `metricD = pace²`); subjective ones describe the body's response
//! (heart rate, acceleration-distribution moments, and the moments-plane
//! distances of the heartbeat distribution).

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::ingest::{rr_to_hr, Activity, MagnitudeSeries, RrSample, SessionMeta};
use crate::momentplane::{metric1, metric2, to_plane};
use crate::stats::{self, StatsError};

#[derive(Debug, thiserror::Error)]
pub enum FeatureError {
    #[error("channel {0} has no samples")]
    MissingChannel(&'static str),
    #[error("invalid session {id}: {reason}")]
    InvalidMeta { id: String, reason: String },
    #[error("need at least 3 rows, got {0}")]
    TooFewRows(usize),
    #[error("unknown feature {0:?}")]
    UnknownFeature(String),
    #[error(transparent)]
    Stats(#[from] StatsError),
    #[error("malformed features row {line}: {reason}")]
    MalformedRow { line: usize, reason: String },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

/// Numeric feature columns, in `features.csv` order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Feature {
    #[serde(rename = "distance")]
    Distance,
    #[serde(rename = "duration")]
    Duration,
    #[serde(rename = "velocity")]
    Velocity,
    #[serde(rename = "pace")]
    Pace,
    #[serde(rename = "metricD")]
    MetricD,
    #[serde(rename = "ahr")]
    Ahr,
    #[serde(rename = "mhr")]
    Mhr,
    #[serde(rename = "acc_mean")]
    AccMean,
    #[serde(rename = "acc_std")]
    AccStd,
    #[serde(rename = "acc_skewness")]
    AccSkewness,
    #[serde(rename = "acc_kurtosis")]
    AccKurtosis,
    #[serde(rename = "metric1")]
    Metric1,
    #[serde(rename = "metric2")]
    Metric2,
}

impl Feature {
    pub const ALL: [Feature; 13] = [
        Feature::Distance,
        Feature::Duration,
        Feature::Velocity,
        Feature::Pace,
        Feature::MetricD,
        Feature::Ahr,
        Feature::Mhr,
        Feature::AccMean,
        Feature::AccStd,
        Feature::AccSkewness,
        Feature::AccKurtosis,
        Feature::Metric1,
        Feature::Metric2,
    ];

    /// Short name used in presets, model files and the correlation matrix.
    pub fn name(self) -> &'static str {
        match self {
            Feature::Distance => "distance",
            Feature::Duration => "duration",
            Feature::Velocity => "velocity",
            Feature::Pace => "pace",
            Feature::MetricD => "metricD",
            Feature::Ahr => "ahr",
            Feature::Mhr => "mhr",
            Feature::AccMean => "acc_mean",
            Feature::AccStd => "acc_std",
            Feature::AccSkewness => "acc_skewness",
            Feature::AccKurtosis => "acc_kurtosis",
            Feature::Metric1 => "metric1",
            Feature::Metric2 => "metric2",
        }
    }

    /// Column header in `features.csv` (carries the unit).
    pub fn column(self) -> &'static str {
        match self {
            Feature::Distance => "distance_km",
            Feature::Duration => "duration_min",
            Feature::Velocity => "velocity_kmh",
            Feature::Pace => "pace_min_per_km",
            Feature::Ahr => "ahr_bpm",
            Feature::Mhr => "mhr_bpm",
            other => other.name(),
        }
    }
}

impl fmt::Display for Feature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Feature {
    type Err = FeatureError;

    /// Accepts either the short name or the column header.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        Feature::ALL
            .into_iter()
            .find(|f| f.name() == s || f.column() == s)
            .ok_or_else(|| FeatureError::UnknownFeature(s.to_string()))
    }
}

/// One session's feature vector. `None` marks a value that is undefined for
/// the session (zero distance, constant channel).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionFeatures {
    pub session_id: String,
    pub activity: Activity,
    pub distance_km: f64,
    pub duration_min: f64,
    pub velocity_kmh: f64,
    pub pace_min_per_km: Option<f64>,
    pub metric_d: Option<f64>,
    pub ahr_bpm: f64,
    pub mhr_bpm: f64,
    pub acc_mean: f64,
    pub acc_std: f64,
    pub acc_skewness: Option<f64>,
    pub acc_kurtosis: Option<f64>,
    pub metric1: Option<f64>,
    pub metric2: Option<f64>,
}

impl SessionFeatures {
    pub fn get(&self, f: Feature) -> Option<f64> {
        match f {
            Feature::Distance => Some(self.distance_km),
            Feature::Duration => Some(self.duration_min),
            Feature::Velocity => Some(self.velocity_kmh),
            Feature::Pace => self.pace_min_per_km,
            Feature::MetricD => self.metric_d,
            Feature::Ahr => Some(self.ahr_bpm),
            Feature::Mhr => Some(self.mhr_bpm),
            Feature::AccMean => Some(self.acc_mean),
            Feature::AccStd => Some(self.acc_std),
            Feature::AccSkewness => self.acc_skewness,
            Feature::AccKurtosis => self.acc_kurtosis,
            Feature::Metric1 => self.metric1,
            Feature::Metric2 => self.metric2,
        }
    }
}

/// Builds the feature vector of one session.
///
/// Heart rate statistics use the unrounded `60000 / rr`. Acceleration
/// moments come from the whole magnitude series and the two plane metrics
/// from the whole-session heartbeat distribution. The rr samples are
/// time-sorted first, so their input order does not matter.
pub fn extract_features(
    meta: &SessionMeta,
    accel: &MagnitudeSeries,
    rr: &[RrSample],
) -> Result<SessionFeatures> {
    let invalid = |reason: &str| FeatureError::InvalidMeta {
        id: meta.session_id.clone(),
        reason: reason.to_string(),
    };
    if !(meta.duration_min.is_finite() && meta.duration_min > 0.0) {
        return Err(invalid("duration_min must be positive"));
    }
    if !(meta.distance_km.is_finite() && meta.distance_km >= 0.0) {
        return Err(invalid("distance_km must be non-negative"));
    }
    if accel.is_empty() {
        return Err(FeatureError::MissingChannel("accel"));
    }
    if rr.is_empty() {
        return Err(FeatureError::MissingChannel("rr"));
    }

    let velocity_kmh = 60.0 * meta.distance_km / meta.duration_min;
    let pace = (meta.distance_km > 0.0).then(|| meta.duration_min / meta.distance_km);

    let mut rr: Vec<RrSample> = rr.to_vec();
    rr.sort_by_key(|s| s.t_ms);
    let hr = rr
        .iter()
        .map(|s| rr_to_hr(s.rr_ms))
        .collect::<Result<Vec<f64>, _>>()
        .map_err(|_| invalid("rr intervals must be positive"))?;
    let ahr_bpm = hr.iter().sum::<f64>() / hr.len() as f64;
    let mhr_bpm = hr.iter().copied().fold(f64::NEG_INFINITY, f64::max);

    let (acc_mean, acc_std, acc_shape) = match stats::moments(&accel.value) {
        Ok(m) => (m.mean, m.std, Some((m.skewness, m.kurtosis))),
        Err(StatsError::DegenerateSample) => {
            let mean = accel.value.iter().sum::<f64>() / accel.len() as f64;
            (mean, 0.0, None)
        }
        Err(e) => return Err(e.into()),
    };

    let rr_values: Vec<f64> = rr.iter().map(|s| s.rr_ms).collect();
    let plane = match stats::moments(&rr_values) {
        Ok(m) => to_plane(&m, 0).ok(),
        Err(StatsError::DegenerateSample | StatsError::TooFewSamples(_)) => None,
        Err(e) => return Err(e.into()),
    };

    Ok(SessionFeatures {
        session_id: meta.session_id.clone(),
        activity: meta.activity,
        distance_km: meta.distance_km,
        duration_min: meta.duration_min,
        velocity_kmh,
        pace_min_per_km: pace,
        metric_d: pace.map(|p| p * p),
        ahr_bpm,
        mhr_bpm,
        acc_mean,
        acc_std,
        acc_skewness: acc_shape.map(|s| s.0),
        acc_kurtosis: acc_shape.map(|s| s.1),
        metric1: plane.as_ref().map(metric1),
        metric2: plane.as_ref().map(metric2),
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// Writes `features.csv`: identifiers followed by every [`Feature`] column,
/// with missing values as empty cells.
pub fn write_features_csv<W: Write>(out: W, rows: &[SessionFeatures]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["session_id", "activity"];
    header.extend(Feature::ALL.iter().map(|f| f.column()));
    w.write_record(&header)?;
    for r in rows {
        let mut rec = vec![r.session_id.clone(), r.activity.to_string()];
        rec.extend(Feature::ALL.iter().map(|&f| cell(r.get(f))));
        w.write_record(&rec)?;
    }
    w.flush()
}

pub fn read_features_csv<R: Read>(input: R) -> Result<Vec<SessionFeatures>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
    let headers = rdr.headers()?.clone();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let id_col = col("session_id");
    let act_col = col("activity");
    let (Some(id_col), Some(act_col)) = (id_col, act_col) else {
        return Err(FeatureError::MalformedRow {
            line: 0,
            reason: "header must contain session_id and activity".into(),
        });
    };
    let feature_cols: Vec<(Feature, usize)> = Feature::ALL
        .iter()
        .map(|&f| {
            col(f.column()).map(|c| (f, c)).ok_or_else(|| FeatureError::MalformedRow {
                line: 0,
                reason: format!("missing column {}", f.column()),
            })
        })
        .collect::<Result<_>>()?;

    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 1;
        let rec = rec?;
        let bad = |reason: String| FeatureError::MalformedRow { line, reason };
        let mut values = [None; Feature::ALL.len()];
        for (slot, &(f, c)) in values.iter_mut().zip(&feature_cols) {
            let raw = rec.get(c).unwrap_or("");
            if !raw.is_empty() {
                let v: f64 = raw
                    .parse()
                    .map_err(|_| bad(format!("{} is not a number: {raw:?}", f.column())))?;
                *slot = Some(v);
            }
        }
        let required = |f: Feature| {
            values[f as usize].ok_or_else(|| bad(format!("{} must not be empty", f.column())))
        };
        out.push(SessionFeatures {
            session_id: rec[id_col].to_string(),
            activity: rec[act_col]
                .parse()
                .map_err(|_| bad(format!("unknown activity {:?}", &rec[act_col])))?,
            distance_km: required(Feature::Distance)?,
            duration_min: required(Feature::Duration)?,
            velocity_kmh: required(Feature::Velocity)?,
            pace_min_per_km: values[Feature::Pace as usize],
            metric_d: values[Feature::MetricD as usize],
            ahr_bpm: required(Feature::Ahr)?,
            mhr_bpm: required(Feature::Mhr)?,
            acc_mean: required(Feature::AccMean)?,
            acc_std: required(Feature::AccStd)?,
            acc_skewness: values[Feature::AccSkewness as usize],
            acc_kurtosis: values[Feature::AccKurtosis as usize],
            metric1: values[Feature::Metric1 as usize],
            metric2: values[Feature::Metric2 as usize],
        });
    }
    Ok(out)
}

/// Pearson correlation of two equally long slices; `None` when either side
/// has zero variance or fewer than 3 points.
pub fn pearson(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = x.len();
    if n != y.len() || n < 3 {
        return None;
    }
    let mx = x.iter().sum::<f64>() / n as f64;
    let my = y.iter().sum::<f64>() / n as f64;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    // variance that is pure rounding noise counts as zero
    let floor = |m: f64| 1e-24 * n as f64 * (m * m).max(1.0);
    if sxx <= floor(mx) || syy <= floor(my) {
        return None;
    }
    Some((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// Average ranks (ties share the mean of their positions), 1-based.
pub fn ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &idx in &order[i..=j] {
            out[idx] = rank;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson(&ranks(x), &ranks(y))
}

/// Symmetric matrix of pairwise Pearson coefficients; `None` entries are
/// undefined (zero variance or fewer than 3 complete pairs).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub features: Vec<Feature>,
    pub r: Vec<Vec<Option<f64>>>,
}

impl CorrelationMatrix {
    pub fn get(&self, a: Feature, b: Feature) -> Option<f64> {
        let i = self.features.iter().position(|&f| f == a)?;
        let j = self.features.iter().position(|&f| f == b)?;
        self.r[i][j]
    }

    /// Writes `corr.csv`: a header row and a leading column of feature names.
    pub fn write_csv<W: Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["feature".to_string()];
        header.extend(self.features.iter().map(|f| f.name().to_string()));
        w.write_record(&header)?;
        for (f, row) in self.features.iter().zip(&self.r) {
            let mut rec = vec![f.name().to_string()];
            rec.extend(row.iter().map(|v| cell(*v)));
            w.write_record(&rec)?;
        }
        w.flush()
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(input);
        let headers = rdr.headers()?.clone();
        let features = headers
            .iter()
            .skip(1)
            .map(str::parse)
            .collect::<Result<Vec<Feature>>>()?;
        let mut r = Vec::with_capacity(features.len());
        for (i, rec) in rdr.records().enumerate() {
            let rec = rec?;
            let row = rec
                .iter()
                .skip(1)
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse().map(Some).map_err(|_| FeatureError::MalformedRow {
                            line: i + 1,
                            reason: format!("not a number: {c:?}"),
                        })
                    }
                })
                .collect::<Result<Vec<_>>>()?;
            r.push(row);
        }
        Ok(CorrelationMatrix { features, r })
    }
}

/// Pearson correlation for every pair of `features`, using for each pair
/// only the rows where both values are present. A feature whose present
/// values are constant gets an undefined row and column, diagonal included.
pub fn correlation_matrix(rows: &[SessionFeatures], features: &[Feature]) -> Result<CorrelationMatrix> {
    if rows.len() < 3 {
        return Err(FeatureError::TooFewRows(rows.len()));
    }
    let columns: Vec<Vec<Option<f64>>> = features
        .iter()
        .map(|&f| rows.iter().map(|r| r.get(f)).collect())
        .collect();
    let constant: Vec<bool> = columns
        .iter()
        .map(|col| {
            let present: Vec<f64> = col.iter().flatten().copied().collect();
            present.len() < 3 || present.iter().all(|v| *v == present[0])
        })
        .collect();

    let p = features.len();
    let mut r = vec![vec![None; p]; p];
    for i in 0..p {
        for j in i..p {
            if constant[i] || constant[j] {
                continue;
            }
            let (x, y): (Vec<f64>, Vec<f64>) = columns[i]
                .iter()
                .zip(&columns[j])
                .filter_map(|(a, b)| Some(((*a)?, (*b)?)))
                .unzip();
            let v = if i == j && x.len() >= 3 {
                Some(1.0)
            } else {
                pearson(&x, &y)
            };
            r[i][j] = v;
            r[j][i] = v;
        }
    }
    Ok(CorrelationMatrix {
        features: features.to_vec(),
        r,
    })
}
