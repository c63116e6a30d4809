use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::model::{Model, ModelKind};
use super::standardize::Standardizer;
use super::{Dataset, LearnError, Result};

/// Ridge term added when the normal equations are (nearly) singular.
pub const RIDGE_LAMBDA: f64 = 1e-8;
/// Condition-number estimate above which the ridge fallback engages.
const MAX_CONDITION: f64 = 1e12;

/// Weights on standardized features plus intercept.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearParams {
    pub w: Vec<f64>,
    pub b: f64,
    #[serde(default)]
    pub ridge_fallback: bool,
}

impl LinearParams {
    pub fn predict(&self, z: &[f64]) -> f64 {
        self.b + self.w.iter().zip(z).map(|(w, x)| w * x).sum::<f64>()
    }
}

/// Ordinary least squares with intercept on standardized features.
///
/// When the condition estimate of `ZᵀZ` exceeds 1e12 (duplicated or
/// constant columns) the system is solved with a ridge term of
/// [`RIDGE_LAMBDA`] and the fallback is recorded on the model.
pub fn fit_lrm(train: &Dataset) -> Result<Model> {
    let p = train.n_features();
    let n = train.len();
    if p == 0 {
        return Err(LearnError::InvalidConfig("no features selected".into()));
    }
    if n < p + 2 {
        return Err(LearnError::TooFewRows { needed: p + 2, got: n });
    }
    let standardizer = Standardizer::fit(&train.x);
    if (0..p).all(|j| standardizer.is_constant(j)) {
        return Err(LearnError::DegenerateDesign);
    }
    let z = standardizer.transform(&train.x);
    let zm = DMatrix::from_fn(n, p, |i, j| z[i][j]);
    let y = DVector::from_column_slice(&train.y);
    let y_mean = y.mean();
    let yc = y.add_scalar(-y_mean);

    let mut gram = zm.transpose() * &zm;
    let rhs = zm.transpose() * yc;

    let eig = gram.clone().symmetric_eigen();
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    let ridge = !(min > 0.0) || max / min > MAX_CONDITION;
    if ridge {
        for j in 0..p {
            gram[(j, j)] += RIDGE_LAMBDA;
        }
    }
    let w = gram
        .cholesky()
        .ok_or(LearnError::DegenerateDesign)?
        .solve(&rhs);
    // standardized training columns have zero mean up to rounding
    let z_means: Vec<f64> = (0..p).map(|j| zm.column(j).mean()).collect();
    let b = y_mean - w.iter().zip(&z_means).map(|(w, m)| w * m).sum::<f64>();
    if !(b.is_finite() && w.iter().all(|v| v.is_finite())) {
        return Err(LearnError::DegenerateDesign);
    }
    if ridge {
        log::info!("normal equations ill-conditioned; ridge fallback λ={RIDGE_LAMBDA}");
    }
    Ok(Model {
        kind: ModelKind::Lrm,
        features: train.features.clone(),
        standardizer,
        lrm: Some(LinearParams {
            w: w.iter().copied().collect(),
            b,
            ridge_fallback: ridge,
        }),
        dnn: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::Feature;

    fn dataset(x: Vec<Vec<f64>>, y: Vec<f64>) -> Dataset {
        let p = x[0].len();
        Dataset {
            features: Feature::ALL[..p].to_vec(),
            ids: (0..y.len()).map(|i| i.to_string()).collect(),
            x,
            y,
        }
    }

    #[test]
    fn single_feature_original_units() {
        let x: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64 * 0.5 - 1.0]).collect();
        let y = x.iter().map(|r| 2.0 * r[0] + 1.0).collect();
        let m = fit_lrm(&dataset(x, y)).unwrap();
        let (w, b) = m.lrm_original_units().unwrap();
        assert!((w[0] - 2.0).abs() < 1e-12, "{w:?}");
        assert!((b - 1.0).abs() < 1e-12);
        assert!(!m.lrm.as_ref().unwrap().ridge_fallback);
    }

    #[test]
    fn exact_linear_recovery() {
        let x: Vec<Vec<f64>> = (0..30)
            .map(|i| {
                let t = i as f64;
                vec![t, (t * 0.7).sin() * 5.0, (t * t) % 7.0]
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 0.3 * r[0] - 2.0 * r[1] + 0.5 * r[2] + 4.0).collect();
        let ds = dataset(x, y.clone());
        let m = fit_lrm(&ds).unwrap();
        let worst = ds.x.iter().zip(&y).map(|(r, t)| (m.predict_row(r) - t).abs()).fold(0.0, f64::max);
        assert!(worst < 1e-8, "{worst}");
    }

    #[test]
    fn duplicated_column_uses_ridge() {
        let x: Vec<Vec<f64>> = (0..25)
            .map(|i| {
                let t = i as f64;
                vec![t, t, (t * 1.3).cos()]
            })
            .collect();
        let y: Vec<f64> = x.iter().map(|r| 1.5 * r[0] + 3.0 * r[2] - 2.0).collect();
        let ds = dataset(x, y.clone());
        let m = fit_lrm(&ds).unwrap();
        assert!(m.lrm.as_ref().unwrap().ridge_fallback);
        for (r, t) in ds.x.iter().zip(&y) {
            assert!((m.predict_row(r) - t).abs() < 1e-6);
        }
    }

    #[test]
    fn constant_design_and_too_few_rows() {
        let ds = dataset(vec![vec![1.0, 2.0]; 6], vec![0.0, 1.0, 2.0, 0.0, 1.0, 2.0]);
        assert_eq!(fit_lrm(&ds), Err(LearnError::DegenerateDesign));
        let ds = dataset(vec![vec![1.0, 2.0], vec![2.0, 1.0], vec![3.0, 5.0]], vec![0.0, 1.0, 2.0]);
        assert_eq!(fit_lrm(&ds), Err(LearnError::TooFewRows { needed: 4, got: 3 }));
    }
}
