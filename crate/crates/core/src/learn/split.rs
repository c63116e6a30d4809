use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{LearnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitFractions {
    pub train: f64,
    pub validation: f64,
    pub prediction: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions { train: 0.7, validation: 0.15, prediction: 0.15 }
    }
}

/// Row indices of each partition.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub prediction: Vec<usize>,
}

/// Shuffles rows with `ChaCha8(seed)` and cuts the order into contiguous
/// train/validation/prediction blocks.
///
/// When every class present has at least 3 rows the shuffled rows are
/// interleaved by their fractional rank within their class before cutting,
/// so each block receives classes in proportion.
pub fn split(labels: &[usize], fractions: SplitFractions, seed: u64) -> Result<Split> {
    let n = labels.len();
    if n < 10 {
        return Err(LearnError::TooFewRows { needed: 10, got: n });
    }
    let f = [fractions.train, fractions.validation, fractions.prediction];
    if f.iter().any(|v| !(*v >= 0.0)) || (f.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(LearnError::InvalidConfig(format!("split fractions {f:?} must be non-negative and sum to 1")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let mut counts = vec![0usize; n_classes];
    for &c in labels {
        counts[c] += 1;
    }
    if counts.iter().all(|&c| c == 0 || c >= 3) {
        let mut seen = vec![0usize; n_classes];
        let mut keyed: Vec<(f64, usize)> = order
            .iter()
            .map(|&i| {
                let c = labels[i];
                let key = (seen[c] as f64 + 0.5) / counts[c] as f64;
                seen[c] += 1;
                (key, i)
            })
            .collect();
        // stable: ties keep shuffled order
        keyed.sort_by(|a, b| a.0.total_cmp(&b.0));
        order = keyed.into_iter().map(|(_, i)| i).collect();
    } else {
        log::info!("a class has fewer than 3 rows; splitting without stratification");
    }

    let n_train = ((n as f64) * fractions.train).round() as usize;
    let n_val = (((n as f64) * fractions.validation).round() as usize).min(n - n_train);
    Ok(Split {
        train: order[..n_train].to_vec(),
        validation: order[n_train..n_train + n_val].to_vec(),
        prediction: order[n_train + n_val..].to_vec(),
    })
}
