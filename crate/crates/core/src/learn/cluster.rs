use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::standardize::Standardizer;
use super::{LearnError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KMeansConfig {
    pub k: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Stop once no centroid moves further than this (standardized units).
    pub tol: f64,
    /// Column whose centroid value orders clusters into intensity labels,
    /// normally `acc_std`.
    pub intensity_column: Option<usize>,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            k: 3,
            seed: 0,
            max_iter: 100,
            tol: 1e-6,
            intensity_column: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Intensity {
    Active,
    Moderate,
    Passive,
}

impl Intensity {
    pub fn as_str(self) -> &'static str {
        match self {
            Intensity::Active => "active",
            Intensity::Moderate => "moderate",
            Intensity::Passive => "passive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub k: usize,
    /// Cluster centres in the original feature units.
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    /// Label per cluster; present when an intensity column was configured.
    pub intensity: Option<Vec<Intensity>>,
    /// Within-cluster sum of squares (standardized units) after each
    /// assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum()
}

fn nearest(p: &[f64], centroids: &[Vec<f64>]) -> (usize, f64) {
    centroids
        .iter()
        .enumerate()
        .map(|(i, c)| (i, dist2(p, c)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
}

fn plus_plus_init(z: &[Vec<f64>], k: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mut centroids = vec![z[rng.random_range(0..z.len())].clone()];
    let mut d2: Vec<f64> = z.iter().map(|p| dist2(p, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let mut target = rng.random::<f64>() * total;
        let mut pick = d2.iter().rposition(|&d| d > 0.0).expect("enough distinct points");
        for (i, &d) in d2.iter().enumerate() {
            if d > 0.0 && target < d {
                pick = i;
                break;
            }
            target -= d;
        }
        let c = z[pick].clone();
        for (d, p) in d2.iter_mut().zip(z) {
            *d = d.min(dist2(p, &c));
        }
        centroids.push(c);
    }
    centroids
}

/// Lloyd's algorithm on standardized rows with seeded k-means++ starts.
///
/// A cluster left empty by an update is moved onto the point farthest from
/// its current centre.
pub fn kmeans(rows: &[Vec<f64>], config: &KMeansConfig) -> Result<ClusterResult> {
    let k = config.k;
    if k == 0 {
        return Err(LearnError::InvalidConfig("k must be positive".into()));
    }
    let scaler = Standardizer::fit(rows);
    let z = scaler.transform(rows);
    let distinct = z
        .iter()
        .map(|r| r.iter().map(|v| v.to_bits()).collect::<Vec<_>>())
        .collect::<HashSet<_>>()
        .len();
    if distinct < k {
        return Err(LearnError::TooFewDistinctPoints { k, distinct });
    }
    if let Some(c) = config.intensity_column {
        if c >= scaler.dim() {
            return Err(LearnError::InvalidConfig(format!("intensity column {c} out of range")));
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut centroids = plus_plus_init(&z, k, &mut rng);
    let dim = scaler.dim();
    let mut assignments = vec![0usize; z.len()];
    let mut inertia_history = Vec::new();
    let mut iterations = 0;

    let assign = |centroids: &[Vec<f64>], assignments: &mut [usize]| -> f64 {
        let mut inertia = 0.0;
        for (a, p) in assignments.iter_mut().zip(&z) {
            let (i, d) = nearest(p, centroids);
            *a = i;
            inertia += d;
        }
        inertia
    };

    while iterations < config.max_iter {
        inertia_history.push(assign(&centroids, &mut assignments));
        iterations += 1;

        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (p, &a) in z.iter().zip(&assignments) {
            counts[a] += 1;
            for (s, v) in sums[a].iter_mut().zip(p) {
                *s += v;
            }
        }
        let mut next: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .zip(&centroids)
            .map(|((s, &n), old)| {
                if n == 0 {
                    old.clone()
                } else {
                    s.into_iter().map(|v| v / n as f64).collect()
                }
            })
            .collect();
        let mut taken = HashSet::new();
        for c in (0..k).filter(|&c| counts[c] == 0) {
            let far = z
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken.contains(i))
                .map(|(i, p)| (i, dist2(p, &next[assignments[i]])))
                .fold((0, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best })
                .0;
            taken.insert(far);
            log::debug!("cluster {c} empty; reseeding at row {far}");
            next[c] = z[far].clone();
        }
        let shift = next
            .iter()
            .zip(&centroids)
            .map(|(a, b)| dist2(a, b).sqrt())
            .fold(0.0, f64::max);
        centroids = next;
        if shift < config.tol {
            break;
        }
    }
    inertia_history.push(assign(&centroids, &mut assignments));

    let centroids: Vec<Vec<f64>> = centroids.iter().map(|c| scaler.inverse_row(c)).collect();
    let intensity = config.intensity_column.map(|col| {
        let mut order: Vec<usize> = (0..k).collect();
        order.sort_by(|&a, &b| centroids[b][col].total_cmp(&centroids[a][col]));
        let mut labels = vec![Intensity::Moderate; k];
        labels[order[0]] = Intensity::Active;
        if k > 1 {
            labels[order[k - 1]] = Intensity::Passive;
        }
        labels
    });
    Ok(ClusterResult {
        k,
        centroids,
        assignments,
        intensity,
        inertia_history,
        iterations,
    })
}
