use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::model::Model;
use super::{decode_target, Dataset, LearnError, Result};
use crate::features::Feature;

/// Regression and classification scores on one split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Evaluation {
    pub n: usize,
    pub mae: f64,
    /// Mean residual deviance under the Gaussian convention, i.e. MSE.
    pub mrd: f64,
    /// `confusion[true][predicted]`, classes in walking/running/skiing order.
    pub confusion: [[usize; 3]; 3],
    pub accuracy: f64,
}

impl Evaluation {
    /// Scores raw predictions against ordinal targets.
    pub fn from_predictions(y: &[f64], yhat: &[f64]) -> Result<Self> {
        if y.is_empty() {
            return Err(LearnError::EmptyEvalSet);
        }
        let n = y.len();
        let mut confusion = [[0usize; 3]; 3];
        let (mut abs, mut sq) = (0.0, 0.0);
        for (t, p) in y.iter().zip(yhat) {
            let r = t - p;
            abs += r.abs();
            sq += r * r;
            confusion[decode_target(*t).index()][decode_target(*p).index()] += 1;
        }
        let hits: usize = (0..3).map(|i| confusion[i][i]).sum();
        Ok(Evaluation {
            n,
            mae: abs / n as f64,
            mrd: sq / n as f64,
            confusion,
            accuracy: hits as f64 / n as f64,
        })
    }
}

pub fn evaluate(model: &Model, ds: &Dataset) -> Result<Evaluation> {
    model.check_dataset(ds)?;
    Evaluation::from_predictions(&ds.y, &model.predict(&ds.x))
}

/// Relative influence of each feature; entries sum to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Importances {
    pub entries: Vec<(Feature, f64)>,
    /// Every raw importance was zero and the uniform split was used.
    pub uniform_fallback: bool,
}

/// Mean increase in MRD when one column is shuffled, floored at 0 and
/// normalized. Each (feature, repeat) pair shuffles with its own stream of
/// `ChaCha8(seed)`, so results do not depend on evaluation order.
pub fn permutation_importance(model: &Model, ds: &Dataset, seed: u64, repeats: usize) -> Result<Importances> {
    if ds.is_empty() {
        return Err(LearnError::EmptyEvalSet);
    }
    if ds.len() < 10 {
        return Err(LearnError::TooFewRows { needed: 10, got: ds.len() });
    }
    if repeats == 0 {
        return Err(LearnError::InvalidConfig("repeats must be positive".into()));
    }
    model.check_dataset(ds)?;
    let base = evaluate(model, ds)?.mrd;
    let p = ds.n_features();
    let mut raw = Vec::with_capacity(p);
    let mut x = ds.x.clone();
    for j in 0..p {
        let mut col: Vec<f64> = ds.x.iter().map(|r| r[j]).collect();
        let mut total = 0.0;
        for r in 0..repeats {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream((j * repeats + r) as u64);
            col.shuffle(&mut rng);
            for (row, v) in x.iter_mut().zip(&col) {
                row[j] = *v;
            }
            let yhat = model.predict(&x);
            total += Evaluation::from_predictions(&ds.y, &yhat)?.mrd - base;
        }
        for (row, orig) in x.iter_mut().zip(&ds.x) {
            row[j] = orig[j];
        }
        let v = total / repeats as f64;
        raw.push(if v.is_finite() { v.max(0.0) } else { 0.0 });
    }
    let sum: f64 = raw.iter().sum();
    let uniform_fallback = !(sum > 0.0);
    if uniform_fallback {
        log::warn!("all permutation importances are zero; reporting uniform weights");
    }
    let entries = ds
        .features
        .iter()
        .zip(&raw)
        .map(|(&f, v)| (f, if uniform_fallback { 1.0 / p as f64 } else { v / sum }))
        .collect();
    Ok(Importances { entries, uniform_fallback })
}

/// Full training and evaluation summary for one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub train_loss: Vec<f64>,
    pub val_loss: Vec<f64>,
    pub mae_train: f64,
    pub mrd_train: f64,
    pub mae_val: f64,
    pub mrd_val: f64,
    pub mae_pred: f64,
    pub mrd_pred: f64,
    /// Confusion matrix and accuracy on the prediction split.
    pub confusion: [[usize; 3]; 3],
    pub accuracy: f64,
    pub importances: Vec<(Feature, f64)>,
}

impl EvalReport {
    pub fn new(
        train: &Evaluation,
        val: &Evaluation,
        pred: &Evaluation,
        losses: Option<&super::LossCurve>,
        importances: &Importances,
    ) -> Self {
        EvalReport {
            train_loss: losses.map(|l| l.train.clone()).unwrap_or_default(),
            val_loss: losses.map(|l| l.val.clone()).unwrap_or_default(),
            mae_train: train.mae,
            mrd_train: train.mrd,
            mae_val: val.mae,
            mrd_val: val.mrd,
            mae_pred: pred.mae,
            mrd_pred: pred.mrd,
            confusion: pred.confusion,
            accuracy: pred.accuracy,
            importances: importances.entries.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::fit_lrm;

    #[test]
    fn perfect_predictions() {
        let y = [0.0, 1.0, 2.0, 2.0];
        let e = Evaluation::from_predictions(&y, &y).unwrap();
        assert_eq!((e.mae, e.mrd, e.accuracy), (0.0, 0.0, 1.0));
        assert_eq!(e.confusion, [[1, 0, 0], [0, 1, 0], [0, 0, 2]]);
    }

    #[test]
    fn constant_prediction_on_balanced_set() {
        let y: Vec<f64> = (0..30).map(|i| (i % 3) as f64).collect();
        let e = Evaluation::from_predictions(&y, &[1.0; 30]).unwrap();
        assert_eq!(e.accuracy, 1.0 / 3.0);
        assert!((e.mae - 2.0 / 3.0).abs() < 1e-15);
        assert!((e.mrd - 2.0 / 3.0).abs() < 1e-15);
        for (i, row) in e.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), 10);
            assert_eq!(row[1], 10, "row {i}");
        }
    }

    #[test]
    fn rounding_absorbs_small_offsets() {
        let y = [0.0, 1.0, 2.0, 1.0, 0.0];
        let yhat: Vec<f64> = y.iter().enumerate().map(|(i, v)| if i % 2 == 0 { v + 0.4 } else { v - 0.4 }).collect();
        let e = Evaluation::from_predictions(&y, &yhat).unwrap();
        assert!((e.mae - 0.4).abs() < 1e-12 && (e.mrd - 0.16).abs() < 1e-12);
        assert_eq!(e.accuracy, 1.0);
        assert_eq!(Evaluation::from_predictions(&[], &[]), Err(LearnError::EmptyEvalSet));
    }

    fn linear_with_noise_column() -> Dataset {
        let x: Vec<Vec<f64>> = (0..60)
            .map(|i| {
                let t = i as f64;
                vec![t * 0.05, (t * 0.9).cos(), ((i * 7919) % 61) as f64]
            })
            .collect();
        let y = x.iter().map(|r| r[0] + 0.5 * r[1]).collect();
        Dataset {
            features: vec![Feature::Distance, Feature::Duration, Feature::AccStd],
            ids: (0..60).map(|i| i.to_string()).collect(),
            x,
            y,
        }
    }

    #[test]
    fn noise_feature_has_no_influence() {
        let ds = linear_with_noise_column();
        let m = fit_lrm(&ds).unwrap();
        assert!(evaluate(&m, &ds).unwrap().mrd < 1e-12);
        let imp = permutation_importance(&m, &ds, 3, 10).unwrap();
        let sum: f64 = imp.entries.iter().map(|e| e.1).sum();
        assert!((sum - 1.0).abs() < 1e-9);
        assert!(imp.entries[2].1 < 0.05, "{imp:?}");
        assert!(imp.entries.iter().all(|e| e.1 >= 0.0));
        assert_eq!(imp, permutation_importance(&m, &ds, 3, 10).unwrap());
    }

    #[test]
    fn single_feature_importance_is_one() {
        let ds0 = linear_with_noise_column();
        let ds = Dataset {
            features: vec![Feature::Distance],
            ids: ds0.ids.clone(),
            x: ds0.x.iter().map(|r| vec![r[0]]).collect(),
            y: ds0.x.iter().map(|r| r[0]).collect(),
        };
        let m = fit_lrm(&ds).unwrap();
        let imp = permutation_importance(&m, &ds, 0, 10).unwrap();
        assert_eq!(imp.entries, vec![(Feature::Distance, 1.0)]);
    }

    #[test]
    fn uniform_fallback_when_nothing_matters() {
        let ds0 = linear_with_noise_column();
        let mut m = fit_lrm(&ds0).unwrap();
        m.lrm.as_mut().unwrap().w = vec![0.0; 3];
        let imp = permutation_importance(&m, &ds0, 0, 3).unwrap();
        assert!(imp.uniform_fallback);
        assert!(imp.entries.iter().all(|e| (e.1 - 1.0 / 3.0).abs() < 1e-15));
    }
}
