//! Moment statistics, sliding-window sampling and bootstrap resampling.
//!
//! All moments use the population convention: the k-th central moment is
//! `m_k = (1/n) Σ (x - mean)^k`, skewness is `m3 / m2^1.5` and kurtosis is
//! the non-excess `m4 / m2²`, so a normal sample sits near 3 and a uniform
//! one near 1.8.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ingest::MagnitudeSeries;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("need at least 4 samples, got {0}")]
    TooFewSamples(usize),
    #[error("sample variance is zero; skewness and kurtosis are undefined")]
    DegenerateSample,
    #[error("non-finite value at index {0}")]
    NonFinite(usize),
    #[error("series of length {len} is shorter than window {window}")]
    SeriesTooShort { len: usize, window: usize },
    #[error("invalid window configuration: {0}")]
    InvalidConfig(String),
}

pub type Result<T, E = StatsError> = std::result::Result<T, E>;

/// Smallest sample size for which all four moments are reported.
pub const MIN_SAMPLES: usize = 4;

/// Default sliding-window length, in samples.
pub const DEFAULT_WINDOW: usize = 300;
/// Default step between consecutive windows, in samples.
pub const DEFAULT_STRIDE: usize = 30;

/// The first four moments of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Moments {
    pub n: usize,
    pub mean: f64,
    pub std: f64,
    pub skewness: f64,
    pub kurtosis: f64,
}

impl Moments {
    /// Pearson's bound `kurtosis >= skewness² + 1`, up to `tol`.
    pub fn is_feasible(&self, tol: f64) -> bool {
        self.kurtosis >= self.skewness * self.skewness + 1.0 - tol
    }
}

/// Location and scale, which stay defined for constant samples.
#[derive(Debug, Clone, Copy, PartialEq)]
struct Central {
    mean: f64,
    m2: f64,
    m3: f64,
    m4: f64,
}

fn central(values: &[f64]) -> Result<Central> {
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(StatsError::NonFinite(i));
    }
    let n = values.len() as f64;
    // Neumaier-compensated sum for the mean, then one refinement pass.
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    let mut mean = (sum + comp) / n;
    mean += values.iter().map(|v| v - mean).sum::<f64>() / n;

    let (mut s2, mut s3, mut s4) = (0.0, 0.0, 0.0);
    for &v in values {
        let d = v - mean;
        let d2 = d * d;
        s2 += d2;
        s3 += d2 * d;
        s4 += d2 * d2;
    }
    Ok(Central {
        mean,
        m2: s2 / n,
        m3: s3 / n,
        m4: s4 / n,
    })
}

fn is_degenerate(c: &Central) -> bool {
    c.m2 < 1e-12 * (1.0 + c.mean * c.mean)
}

/// Mean, standard deviation, skewness and kurtosis of `values`.
///
/// Fails with [`StatsError::TooFewSamples`] below four values and with
/// [`StatsError::DegenerateSample`] when the variance is numerically zero
/// relative to the mean.
pub fn moments(values: &[f64]) -> Result<Moments> {
    if values.len() < MIN_SAMPLES {
        return Err(StatsError::TooFewSamples(values.len()));
    }
    let c = central(values)?;
    if is_degenerate(&c) {
        return Err(StatsError::DegenerateSample);
    }
    Ok(Moments {
        n: values.len(),
        mean: c.mean,
        std: c.m2.sqrt(),
        skewness: c.m3 / c.m2.powf(1.5),
        kurtosis: c.m4 / (c.m2 * c.m2),
    })
}

/// A contiguous slice of a series together with its statistics.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub start_index: usize,
    pub length: usize,
    pub t_start_ms: u64,
    pub t_end_ms: u64,
    pub mean: f64,
    pub std: f64,
    /// `None` when the window is degenerate (zero variance).
    pub moments: Option<Moments>,
}

impl SampleWindow {
    pub fn is_degenerate(&self) -> bool {
        self.moments.is_none()
    }

    pub fn t_mid_ms(&self) -> u64 {
        self.t_start_ms + (self.t_end_ms - self.t_start_ms) / 2
    }
}

/// Cuts `series` into windows of `window` samples starting every `stride`
/// samples. A trailing partial window is discarded; degenerate windows are
/// kept and flagged so indices stay aligned with time.
pub fn sliding_windows(
    series: &MagnitudeSeries,
    window: usize,
    stride: usize,
) -> Result<Vec<SampleWindow>> {
    if window < MIN_SAMPLES {
        return Err(StatsError::InvalidConfig(format!(
            "window must be at least {MIN_SAMPLES}, got {window}"
        )));
    }
    if stride == 0 {
        return Err(StatsError::InvalidConfig("stride must be at least 1".into()));
    }
    if series.t_ms.len() != series.value.len() {
        return Err(StatsError::InvalidConfig(
            "series time and value lengths differ".into(),
        ));
    }
    let len = series.len();
    if len < window {
        return Err(StatsError::SeriesTooShort { len, window });
    }
    (0..=len - window)
        .step_by(stride)
        .map(|start| {
            let slice = &series.value[start..start + window];
            let c = central(slice).map_err(|e| match e {
                StatsError::NonFinite(i) => StatsError::NonFinite(start + i),
                other => other,
            })?;
            let moments = (!is_degenerate(&c)).then(|| Moments {
                n: window,
                mean: c.mean,
                std: c.m2.sqrt(),
                skewness: c.m3 / c.m2.powf(1.5),
                kurtosis: c.m4 / (c.m2 * c.m2),
            });
            Ok(SampleWindow {
                start_index: start,
                length: window,
                t_start_ms: series.t_ms[start],
                t_end_ms: series.t_ms[start + window - 1],
                mean: c.mean,
                std: c.m2.sqrt(),
                moments,
            })
        })
        .collect()
}

/// Writes the window table
/// `start_index,t_start_ms,t_end_ms,n,mean,std,skewness,kurtosis,degenerate`.
/// Degenerate windows leave skewness and kurtosis empty.
pub fn write_windows_csv<W: std::io::Write>(out: W, windows: &[SampleWindow]) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "start_index",
        "t_start_ms",
        "t_end_ms",
        "n",
        "mean",
        "std",
        "skewness",
        "kurtosis",
        "degenerate",
    ])?;
    for win in windows {
        let (skew, kurt) = match &win.moments {
            Some(m) => (m.skewness.to_string(), m.kurtosis.to_string()),
            None => (String::new(), String::new()),
        };
        w.write_record([
            win.start_index.to_string(),
            win.t_start_ms.to_string(),
            win.t_end_ms.to_string(),
            win.length.to_string(),
            win.mean.to_string(),
            win.std.to_string(),
            skew,
            kurt,
            win.is_degenerate().to_string(),
        ])?;
    }
    w.flush()
}

/// Moments of `B` with-replacement resamples of one window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapCloud {
    pub points: Vec<Moments>,
    pub seed: u64,
    /// Start index of the window the cloud was drawn from, when known.
    pub source_window: Option<usize>,
}

// A resample of a non-constant sample is constant only with vanishing
// probability for realistic n; this bounds the redraw loop.
const MAX_REDRAWS: usize = 10_000;

/// Nonparametric bootstrap of the four moments.
///
/// Resample `i` draws from its own ChaCha stream (`seed`, stream `i`), so the
/// cloud does not depend on the order in which resamples are evaluated. A
/// resample that happens to be constant is redrawn from the same stream.
pub fn bootstrap(values: &[f64], resamples: usize, seed: u64) -> Result<BootstrapCloud> {
    if values.len() < MIN_SAMPLES {
        return Err(StatsError::TooFewSamples(values.len()));
    }
    if resamples == 0 {
        return Err(StatsError::InvalidConfig("need at least one resample".into()));
    }
    // the source itself must be non-degenerate, otherwise no resample can be
    moments(values)?;
    let n = values.len();
    let mut buf = vec![0.0; n];
    let points = (0..resamples)
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            for _ in 0..MAX_REDRAWS {
                for slot in buf.iter_mut() {
                    *slot = values[rng.random_range(0..n)];
                }
                match moments(&buf) {
                    Ok(m) => return Ok(m),
                    Err(StatsError::DegenerateSample) => continue,
                    Err(e) => return Err(e),
                }
            }
            Err(StatsError::DegenerateSample)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(BootstrapCloud {
        points,
        seed,
        source_window: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand_distr::{Distribution, StandardNormal};

    fn series(values: Vec<f64>) -> MagnitudeSeries {
        MagnitudeSeries {
            t_ms: (0..values.len() as u64).map(|i| i * 10).collect(),
            value: values,
        }
    }

    #[test]
    fn one_to_five() {
        // m2 = (4+1+0+1+4)/5 = 2, m4 = (16+1+0+1+16)/5 = 6.8, kurtosis = 6.8/4
        let m = moments(&[1.0, 2.0, 3.0, 4.0, 5.0]).unwrap();
        assert_eq!(m.n, 5);
        assert_eq!(m.mean, 3.0);
        assert!((m.std - 2f64.sqrt()).abs() < 1e-15);
        assert_eq!(m.skewness, 0.0);
        assert!((m.kurtosis - 1.7).abs() < 1e-15);
    }

    #[test]
    fn constant_and_short_samples() {
        assert_eq!(moments(&[2.5; 4]), Err(StatsError::DegenerateSample));
        assert_eq!(moments(&[1.0, 2.0, 3.0]), Err(StatsError::TooFewSamples(3)));
        assert_eq!(
            moments(&[1.0, f64::NAN, 3.0, 4.0]),
            Err(StatsError::NonFinite(1))
        );
        // tiny spread around a large mean is still degenerate
        assert_eq!(
            moments(&[1e6, 1e6 + 1e-9, 1e6, 1e6 + 1e-9]),
            Err(StatsError::DegenerateSample)
        );
    }

    #[test]
    fn normal_kurtosis_monte_carlo() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let xs: Vec<f64> = (0..100_000).map(|_| StandardNormal.sample(&mut rng)).collect();
        let m = moments(&xs).unwrap();
        assert!((m.kurtosis - 3.0).abs() < 0.1, "{}", m.kurtosis);
        assert!(m.skewness.abs() < 0.05);
    }

    #[test]
    fn window_offsets() {
        let w = sliding_windows(&series((0..10).map(f64::from).collect()), 4, 3).unwrap();
        assert_eq!(w.iter().map(|w| w.start_index).collect::<Vec<_>>(), [0, 3, 6]);
        assert_eq!(w[1].t_start_ms, 30);
        assert_eq!(w[1].t_end_ms, 60);
        assert_eq!(w[1].t_mid_ms(), 45);

        let w = sliding_windows(&series(vec![1.0, 2.0, 4.0, 8.0]), 4, 1).unwrap();
        assert_eq!(w.len(), 1);

        let w = sliding_windows(&series((0..1000).map(|i| (i as f64).sin()).collect()), 300, 30)
            .unwrap();
        let expected: Vec<usize> = (0..).map(|k| k * 30).take_while(|o| o + 300 <= 1000).collect();
        assert_eq!(expected.len(), 24);
        assert_eq!(w.iter().map(|w| w.start_index).collect::<Vec<_>>(), expected);
    }

    #[test]
    fn window_errors_and_degenerate_flag() {
        assert_eq!(
            sliding_windows(&series(vec![1.0; 5]), 6, 1),
            Err(StatsError::SeriesTooShort { len: 5, window: 6 })
        );
        assert!(matches!(
            sliding_windows(&series(vec![1.0; 5]), 3, 1),
            Err(StatsError::InvalidConfig(_))
        ));
        assert!(matches!(
            sliding_windows(&series(vec![1.0; 5]), 4, 0),
            Err(StatsError::InvalidConfig(_))
        ));
        let mut v = vec![5.0; 8];
        v.extend([1.0, 2.0, 3.0, 4.0]);
        let w = sliding_windows(&series(v), 4, 4).unwrap();
        assert_eq!(w.len(), 3);
        assert!(w[0].is_degenerate() && w[1].is_degenerate());
        assert!(!w[2].is_degenerate());
        assert_eq!(w[0].mean, 5.0);
        assert_eq!(w[0].std, 0.0);
    }

    #[test]
    fn windows_csv_layout() {
        let mut v = vec![5.0; 4];
        v.extend([1.0, 2.0, 3.0, 4.0, 5.0]);
        let w = sliding_windows(&series(v), 4, 4).unwrap();
        let mut buf = Vec::new();
        write_windows_csv(&mut buf, &w).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "start_index,t_start_ms,t_end_ms,n,mean,std,skewness,kurtosis,degenerate");
        assert_eq!(lines[1], "0,0,30,4,5,0,,,true");
        assert!(lines[2].ends_with(",false"));
        assert_eq!(lines.len(), 3);
    }

    #[test]
    fn bootstrap_single_point_and_determinism() {
        let values = [1.0, 4.0, 2.0, 8.0, 5.0, 7.0];
        let c = bootstrap(&values, 1, 99).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!(c.points[0].is_feasible(1e-12));

        let a = bootstrap(&values, 50, 3).unwrap();
        let b = bootstrap(&values, 50, 3).unwrap();
        assert_eq!(a, b);
        let c = bootstrap(&values, 50, 4).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn bootstrap_errors() {
        assert_eq!(bootstrap(&[1.0, 2.0], 10, 0), Err(StatsError::TooFewSamples(2)));
        assert_eq!(bootstrap(&[3.0; 10], 10, 0), Err(StatsError::DegenerateSample));
        assert!(matches!(bootstrap(&[1.0, 2.0, 3.0, 4.0], 0, 0), Err(StatsError::InvalidConfig(_))));
    }

    #[test]
    fn bootstrap_prefix_is_stable() {
        // resample i depends only on (seed, i)
        let values: Vec<f64> = (0..40).map(|i| ((i * 7) % 13) as f64).collect();
        let short = bootstrap(&values, 5, 21).unwrap();
        let long = bootstrap(&values, 20, 21).unwrap();
        assert_eq!(short.points[..], long.points[..5]);
    }

    fn naive(values: &[f64]) -> (f64, f64, f64, f64) {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let m = |k: i32| values.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / n;
        let (m2, m3, m4) = (m(2), m(3), m(4));
        (mean, m2.sqrt(), m3 / m2.powf(1.5), m4 / (m2 * m2))
    }

    proptest! {
        #[test]
        fn affine_invariance(
            xs in prop::collection::vec(-100.0f64..100.0, 4..60),
            a in 0.01f64..100.0,
            b in -1e3f64..1e3,
        ) {
            let Ok(m) = moments(&xs) else { return Ok(()); };
            prop_assume!(m.std > 1e-3);
            let ys: Vec<f64> = xs.iter().map(|x| a * x + b).collect();
            let t = moments(&ys).unwrap();
            prop_assert!((t.skewness - m.skewness).abs() < 1e-9 * (1.0 + m.skewness.abs()));
            prop_assert!((t.kurtosis - m.kurtosis).abs() < 1e-9 * m.kurtosis);
        }

        #[test]
        fn sign_flip(xs in prop::collection::vec(-100.0f64..100.0, 4..60)) {
            let Ok(m) = moments(&xs) else { return Ok(()); };
            let neg: Vec<f64> = xs.iter().map(|x| -x).collect();
            let t = moments(&neg).unwrap();
            prop_assert!((t.skewness + m.skewness).abs() < 1e-12 * (1.0 + m.skewness.abs()));
            prop_assert!((t.kurtosis - m.kurtosis).abs() < 1e-12 * m.kurtosis);
        }

        #[test]
        fn pearson_inequality(xs in prop::collection::vec(-1e3f64..1e3, 4..200)) {
            if let Ok(m) = moments(&xs) {
                prop_assert!(m.is_feasible(1e-12), "{m:?}");
            }
        }

        #[test]
        fn agrees_with_naive_two_pass(xs in prop::collection::vec(-1e3f64..1e3, 4..300)) {
            let Ok(m) = moments(&xs) else { return Ok(()); };
            let (mean, std, skew, kurt) = naive(&xs);
            let rel = |a: f64, b: f64| (a - b).abs() / b.abs().max(1e-300);
            prop_assert!((m.mean - mean).abs() <= 1e-9 * mean.abs().max(std));
            prop_assert!(rel(m.std, std) < 1e-9);
            prop_assert!((m.skewness - skew).abs() <= 1e-9 * skew.abs().max(1.0));
            prop_assert!(rel(m.kurtosis, kurt) < 1e-9);
        }
    }
}
