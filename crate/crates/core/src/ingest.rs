//! Typed readers and writers for the raw sensor CSV files.
//!
//! Three file kinds are understood, all UTF-8, comma separated, with a dot
//! decimal separator and exactly one header row:
//!
//! | file          | header                                                        |
//! |---------------|---------------------------------------------------------------|
//! | accelerometer | `t_ms,ax,ay,az`                                               |
//! | heartbeat     | `t_ms,rr_ms`                                                  |
//! | sessions      | `session_id,activity,distance_km,duration_min,accel_file,rr_file` |
//!
//! Line numbers in errors count data rows from 1; the header is not counted.

use std::fmt;
use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Errors raised while reading or validating raw sensor data.
#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("unexpected header {found:?}, expected {expected:?}")]
    BadHeader { expected: String, found: String },
    #[error("malformed row at line {0}")]
    MalformedRow(usize),
    #[error("timestamp not strictly increasing at line {0}")]
    NonMonotonicTime(usize),
    #[error("rr interval must be positive and finite at line {0}")]
    InvalidRr(usize),
    #[error("invalid session metadata at line {line}: {reason}")]
    InvalidSession { line: usize, reason: String },
    #[error("empty input series")]
    EmptyInput,
    #[error("rr interval must be positive, got {0}")]
    NonPositiveRr(f64),
    #[error("unknown activity label {0:?}")]
    UnknownLabel(String),
}

pub type Result<T, E = IngestError> = std::result::Result<T, E>;

/// One tri-axial accelerometer reading.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccelSample {
    pub t_ms: u64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl AccelSample {
    pub fn magnitude(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }
}

/// One heartbeat: the interval to the previous beat in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RrSample {
    pub t_ms: u64,
    pub rr_ms: f64,
}

/// Activity labels known to the pipeline.
///
/// The declaration order is the ordinal code used as a regression target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activity {
    Walking,
    Running,
    Skiing,
}

impl Activity {
    /// The label registry, in ordinal order.
    pub const ALL: [Activity; 3] = [Activity::Walking, Activity::Running, Activity::Skiing];

    pub fn as_str(self) -> &'static str {
        match self {
            Activity::Walking => "walking",
            Activity::Running => "running",
            Activity::Skiing => "skiing",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Activity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Activity {
    type Err = IngestError;

    fn from_str(s: &str) -> Result<Self> {
        Activity::ALL
            .into_iter()
            .find(|a| a.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| IngestError::UnknownLabel(s.to_string()))
    }
}

/// Objective description of one exercise session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMeta {
    pub session_id: String,
    pub activity: Activity,
    pub distance_km: f64,
    pub duration_min: f64,
}

/// A row of `sessions.csv`: metadata plus the channel files it refers to.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionRecord {
    pub meta: SessionMeta,
    pub accel_file: PathBuf,
    pub rr_file: PathBuf,
}

/// Scalar time series shared by both channels.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct MagnitudeSeries {
    pub t_ms: Vec<u64>,
    pub value: Vec<f64>,
}

impl MagnitudeSeries {
    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }

    /// Heartbeat series: `value` holds the rr intervals in milliseconds.
    pub fn from_rr(samples: &[RrSample]) -> Self {
        MagnitudeSeries {
            t_ms: samples.iter().map(|s| s.t_ms).collect(),
            value: samples.iter().map(|s| s.rr_ms).collect(),
        }
    }
}

const ACCEL_HEADER: [&str; 4] = ["t_ms", "ax", "ay", "az"];
const RR_HEADER: [&str; 2] = ["t_ms", "rr_ms"];
const SESSION_HEADER: [&str; 6] = [
    "session_id",
    "activity",
    "distance_km",
    "duration_min",
    "accel_file",
    "rr_file",
];

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| IngestError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(input)
}

fn check_header<R: Read>(rdr: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let found = rdr.headers().map_err(|_| IngestError::EmptyFile)?.clone();
    if found.is_empty() || (found.len() == 1 && found[0].is_empty()) {
        return Err(IngestError::EmptyFile);
    }
    if found.iter().ne(expected.iter().copied()) {
        return Err(IngestError::BadHeader {
            expected: expected.join(","),
            found: found.iter().collect::<Vec<_>>().join(","),
        });
    }
    Ok(())
}

/// Iterates data records as `(line_no, record)`, mapping csv failures and
/// wrong field counts to [`IngestError::MalformedRow`].
fn records<R: Read>(
    rdr: &mut csv::Reader<R>,
    width: usize,
) -> impl Iterator<Item = Result<(usize, csv::StringRecord)>> + '_ {
    rdr.records().enumerate().map(move |(i, rec)| {
        let line = i + 1;
        match rec {
            Ok(r) if r.len() == width => Ok((line, r)),
            _ => Err(IngestError::MalformedRow(line)),
        }
    })
}

fn field<T: FromStr>(rec: &csv::StringRecord, idx: usize, line: usize) -> Result<T> {
    rec[idx].parse().map_err(|_| IngestError::MalformedRow(line))
}

fn finite(v: f64, line: usize) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(IngestError::MalformedRow(line))
    }
}

pub fn read_accel<R: Read>(input: R) -> Result<Vec<AccelSample>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &ACCEL_HEADER)?;
    let mut out: Vec<AccelSample> = Vec::new();
    for rec in records(&mut rdr, ACCEL_HEADER.len()) {
        let (line, rec) = rec?;
        let sample = AccelSample {
            t_ms: field(&rec, 0, line)?,
            ax: finite(field(&rec, 1, line)?, line)?,
            ay: finite(field(&rec, 2, line)?, line)?,
            az: finite(field(&rec, 3, line)?, line)?,
        };
        if out.last().is_some_and(|prev| sample.t_ms <= prev.t_ms) {
            return Err(IngestError::NonMonotonicTime(line));
        }
        out.push(sample);
    }
    if out.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(out)
}

pub fn read_rr<R: Read>(input: R) -> Result<Vec<RrSample>> {
    let mut rdr = reader(input);
    check_header(&mut rdr, &RR_HEADER)?;
    let mut out: Vec<RrSample> = Vec::new();
    for rec in records(&mut rdr, RR_HEADER.len()) {
        let (line, rec) = rec?;
        let t_ms = field(&rec, 0, line)?;
        let rr_ms: f64 = field(&rec, 1, line)?;
        if !(rr_ms.is_finite() && rr_ms > 0.0) {
            return Err(IngestError::InvalidRr(line));
        }
        if out.last().is_some_and(|prev| t_ms <= prev.t_ms) {
            return Err(IngestError::NonMonotonicTime(line));
        }
        out.push(RrSample { t_ms, rr_ms });
    }
    if out.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(out)
}

/// Parses an accelerometer file (`t_ms,ax,ay,az`).
pub fn parse_accel_csv(path: impl AsRef<Path>) -> Result<Vec<AccelSample>> {
    read_accel(open(path.as_ref())?)
}

/// Parses a heartbeat file (`t_ms,rr_ms`).
pub fn parse_rr_csv(path: impl AsRef<Path>) -> Result<Vec<RrSample>> {
    read_rr(open(path.as_ref())?)
}

/// Parses `sessions.csv`. Relative channel paths are resolved against the
/// directory containing the sessions file.
pub fn parse_sessions_csv(path: impl AsRef<Path>) -> Result<Vec<SessionRecord>> {
    let path = path.as_ref();
    let base = path.parent().unwrap_or_else(|| Path::new(""));
    let mut rdr = reader(open(path)?);
    check_header(&mut rdr, &SESSION_HEADER)?;
    let mut out = Vec::new();
    for rec in records(&mut rdr, SESSION_HEADER.len()) {
        let (line, rec) = rec?;
        let invalid = |reason: &str| IngestError::InvalidSession {
            line,
            reason: reason.to_string(),
        };
        let activity: Activity = rec[1].parse()?;
        let distance_km: f64 = field(&rec, 2, line)?;
        let duration_min: f64 = field(&rec, 3, line)?;
        if !(distance_km.is_finite() && distance_km >= 0.0) {
            return Err(invalid("distance_km must be finite and non-negative"));
        }
        if !(duration_min.is_finite() && duration_min > 0.0) {
            return Err(invalid("duration_min must be positive"));
        }
        out.push(SessionRecord {
            meta: SessionMeta {
                session_id: rec[0].to_string(),
                activity,
                distance_km,
                duration_min,
            },
            accel_file: base.join(&rec[4]),
            rr_file: base.join(&rec[5]),
        });
    }
    if out.is_empty() {
        return Err(IngestError::EmptyFile);
    }
    Ok(out)
}

// Writers use `Display` for floats, which prints the shortest string that
// parses back to the same value, so write-then-parse is lossless.

pub fn write_accel<W: Write>(out: W, samples: &[AccelSample]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ACCEL_HEADER)?;
    for s in samples {
        w.write_record([
            s.t_ms.to_string(),
            s.ax.to_string(),
            s.ay.to_string(),
            s.az.to_string(),
        ])?;
    }
    w.flush()
}

pub fn write_rr<W: Write>(out: W, samples: &[RrSample]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RR_HEADER)?;
    for s in samples {
        w.write_record([s.t_ms.to_string(), s.rr_ms.to_string()])?;
    }
    w.flush()
}

/// Writes `sessions.csv`. Channel paths are written as given, so callers
/// should pass paths relative to the sessions file's directory.
pub fn write_sessions<W: Write>(out: W, records: &[SessionRecord]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SESSION_HEADER)?;
    for r in records {
        w.write_record([
            r.meta.session_id.clone(),
            r.meta.activity.to_string(),
            r.meta.distance_km.to_string(),
            r.meta.duration_min.to_string(),
            r.accel_file.to_string_lossy().replace('\\', "/"),
            r.rr_file.to_string_lossy().replace('\\', "/"),
        ])?;
    }
    w.flush()
}

/// Reduces tri-axial samples to their Euclidean magnitude, optionally
/// removing the series mean (gravity offset).
pub fn accel_magnitude(samples: &[AccelSample], center: bool) -> Result<MagnitudeSeries> {
    if samples.is_empty() {
        return Err(IngestError::EmptyInput);
    }
    let mut value: Vec<f64> = samples.iter().map(AccelSample::magnitude).collect();
    if center {
        let mean = value.iter().sum::<f64>() / value.len() as f64;
        // second pass removes the rounding residue left by the first
        let residue = value.iter().map(|v| v - mean).sum::<f64>() / value.len() as f64;
        for v in &mut value {
            *v = (*v - mean) - residue;
        }
    }
    Ok(MagnitudeSeries {
        t_ms: samples.iter().map(|s| s.t_ms).collect(),
        value,
    })
}

/// Instantaneous heart rate in beats per minute, unrounded.
pub fn rr_to_hr(rr_ms: f64) -> Result<f64> {
    if !(rr_ms > 0.0) || !rr_ms.is_finite() {
        return Err(IngestError::NonPositiveRr(rr_ms));
    }
    Ok(60_000.0 / rr_ms)
}

/// Heart rate as a device would display it: rounded half-to-even.
pub fn hr_display(rr_ms: f64) -> Result<i64> {
    Ok(rr_to_hr(rr_ms)?.round_ties_even() as i64)
}
