//! Activity prediction and intensity clustering.
//!
//! Activities are predicted as an ordinal regression target
//! (walking 0, running 1, skiing 2) and decoded by rounding and clamping,
//! so the same model yields both regression errors (MAE, MRD) and a
//! confusion matrix.

mod cluster;
mod eval;
mod linear;
mod model;
mod network;
mod preset;
mod split;
mod standardize;

pub use cluster::{kmeans, ClusterResult, Intensity, KMeansConfig};
pub use eval::{evaluate, permutation_importance, EvalReport, Evaluation, Importances};
pub use linear::{fit_lrm, LinearParams, RIDGE_LAMBDA};
pub use model::{Model, ModelKind};
pub use network::{fit_dnn, DnnConfig, Layer, LossCurve, Network};
pub use preset::FeaturePreset;
pub use split::{split, Split, SplitFractions};
pub use standardize::Standardizer;

use crate::features::{Feature, SessionFeatures};
use crate::ingest::Activity;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LearnError {
    #[error("unknown activity label {0:?}")]
    UnknownLabel(String),
    #[error("unknown preset {0:?}")]
    UnknownPreset(String),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("every feature is constant on the training rows")]
    DegenerateDesign,
    #[error("loss became non-finite at epoch {epoch} (last finite train loss {last_finite:?})")]
    NonFiniteLoss { epoch: usize, last_finite: Option<f64> },
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("need at least {k} distinct points, got {distinct}")]
    TooFewDistinctPoints { k: usize, distinct: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("model file is inconsistent: {0}")]
    InvalidModel(String),
}

pub type Result<T, E = LearnError> = std::result::Result<T, E>;

/// Ordinal regression target of an activity.
pub fn encode_target(activity: Activity) -> f64 {
    activity.index() as f64
}

/// Parses a label and encodes it.
pub fn encode_label(label: &str) -> Result<f64> {
    label
        .parse::<Activity>()
        .map(encode_target)
        .map_err(|_| LearnError::UnknownLabel(label.to_string()))
}

/// Nearest activity code, clamped to the label range.
pub fn decode_target(y: f64) -> Activity {
    let max = (Activity::ALL.len() - 1) as f64;
    let idx = if y.is_nan() { 0.0 } else { y.round().clamp(0.0, max) };
    Activity::ALL[idx as usize]
}

/// A design matrix drawn from session features.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub features: Vec<Feature>,
    pub ids: Vec<String>,
    pub x: Vec<Vec<f64>>,
    pub y: Vec<f64>,
}

impl Dataset {
    /// Selects `features` from each session, skipping sessions where any of
    /// them is missing. Returns the dataset and the number of skipped rows.
    pub fn from_sessions(rows: &[SessionFeatures], features: &[Feature]) -> (Self, usize) {
        let mut ds = Dataset {
            features: features.to_vec(),
            ids: Vec::new(),
            x: Vec::new(),
            y: Vec::new(),
        };
        let mut skipped = 0;
        for r in rows {
            match features.iter().map(|&f| r.get(f)).collect::<Option<Vec<f64>>>() {
                Some(v) => {
                    ds.ids.push(r.session_id.clone());
                    ds.x.push(v);
                    ds.y.push(encode_target(r.activity));
                }
                None => skipped += 1,
            }
        }
        (ds, skipped)
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.features.len()
    }

    /// Class index of each row (targets are exact ordinal codes).
    pub fn classes(&self) -> Vec<usize> {
        self.y.iter().map(|&y| decode_target(y).index()).collect()
    }

    /// Rows at `idx`, in that order.
    pub fn subset(&self, idx: &[usize]) -> Dataset {
        Dataset {
            features: self.features.clone(),
            ids: idx.iter().map(|&i| self.ids[i].clone()).collect(),
            x: idx.iter().map(|&i| self.x[i].clone()).collect(),
            y: idx.iter().map(|&i| self.y[i]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn target_codes() {
        assert_eq!(encode_target(Activity::Walking), 0.0);
        assert_eq!(encode_target(Activity::Skiing), 2.0);
        assert_eq!(encode_label("running").unwrap(), 1.0);
        assert_eq!(encode_label("rowing"), Err(LearnError::UnknownLabel("rowing".into())));
        assert_eq!(decode_target(1.3), Activity::Running);
        assert_eq!(decode_target(-0.7), Activity::Walking);
        assert_eq!(decode_target(7.2), Activity::Skiing);
        assert_eq!(decode_target(1.5), Activity::Skiing);
        assert_eq!(decode_target(f64::NAN), Activity::Walking);
    }
}
