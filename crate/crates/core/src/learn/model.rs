use serde::{Deserialize, Serialize};

use super::linear::LinearParams;
use super::network::Network;
use super::standardize::Standardizer;
use super::{Dataset, LearnError, Result};
use crate::features::Feature;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Lrm,
    Dnn,
}

impl ModelKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lrm => "lrm",
            ModelKind::Dnn => "dnn",
        }
    }
}

/// A fitted activity regressor together with the feature scaling it was
/// trained under. Inputs are raw feature values in `features` order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub kind: ModelKind,
    pub features: Vec<Feature>,
    pub standardizer: Standardizer,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lrm: Option<LinearParams>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dnn: Option<Network>,
}

impl Model {
    pub fn predict_row(&self, raw: &[f64]) -> f64 {
        let z = self.standardizer.transform_row(raw);
        match (&self.lrm, &self.dnn) {
            (Some(l), _) => l.predict(&z),
            (None, Some(n)) => n.forward(&z),
            (None, None) => f64::NAN,
        }
    }

    pub fn predict(&self, x: &[Vec<f64>]) -> Vec<f64> {
        x.iter().map(|r| self.predict_row(r)).collect()
    }

    /// Linear weights and intercept expressed on raw feature scales.
    /// Constant features get weight 0.
    pub fn lrm_original_units(&self) -> Option<(Vec<f64>, f64)> {
        let l = self.lrm.as_ref()?;
        let s = &self.standardizer;
        let w: Vec<f64> = l
            .w
            .iter()
            .zip(&s.stds)
            .map(|(w, sd)| if *sd == 0.0 { 0.0 } else { w / sd })
            .collect();
        let b = l.b - w.iter().zip(&s.means).map(|(w, m)| w * m).sum::<f64>();
        Some((w, b))
    }

    /// Checks that `ds` carries exactly the columns this model expects.
    pub fn check_dataset(&self, ds: &Dataset) -> Result<()> {
        if ds.features != self.features {
            return Err(LearnError::InvalidModel(format!(
                "model expects features {:?}, data has {:?}",
                names(&self.features),
                names(&ds.features)
            )));
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let p = self.features.len();
        let bad = |msg: String| Err(LearnError::InvalidModel(msg));
        if p == 0 {
            return bad("no features".into());
        }
        if self.standardizer.means.len() != p || self.standardizer.stds.len() != p {
            return bad(format!("standardizer width differs from {p} features"));
        }
        match (self.kind, &self.lrm, &self.dnn) {
            (ModelKind::Lrm, Some(l), None) => {
                if l.w.len() != p {
                    return bad(format!("{} weights for {p} features", l.w.len()));
                }
            }
            (ModelKind::Dnn, None, Some(n)) => {
                let mut width = p;
                if n.layers.is_empty() {
                    return bad("network has no layers".into());
                }
                for (i, layer) in n.layers.iter().enumerate() {
                    if layer.w.len() != layer.b.len() || layer.w.iter().any(|r| r.len() != width) {
                        return bad(format!("layer {i} shape does not chain from width {width}"));
                    }
                    width = layer.b.len();
                }
                if width != 1 {
                    return bad(format!("network output width {width}, expected 1"));
                }
            }
            (kind, _, _) => {
                return bad(format!("parameters do not match kind {:?}", kind.as_str()));
            }
        }
        Ok(())
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("model serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: Model = serde_json::from_str(s).map_err(|e| LearnError::InvalidModel(e.to_string()))?;
        m.validate()?;
        Ok(m)
    }
}

fn names(fs: &[Feature]) -> Vec<&'static str> {
    fs.iter().map(|f| f.name()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{fit_dnn, fit_lrm, DnnConfig};

    fn data() -> Dataset {
        let x: Vec<Vec<f64>> = (0..40)
            .map(|i| {
                let t = i as f64;
                vec![t * 0.37, (t * 1.7).sin(), 1e-3 * t * t]
            })
            .collect();
        let y = x.iter().map(|r| (r[0] * 0.2 + r[1]).clamp(0.0, 2.0)).collect();
        Dataset {
            features: vec![Feature::Distance, Feature::AccStd, Feature::Metric1],
            ids: (0..40).map(|i| i.to_string()).collect(),
            x,
            y,
        }
    }

    #[test]
    fn json_round_trip_is_bit_exact() {
        let ds = data();
        let lrm = fit_lrm(&ds).unwrap();
        let (dnn, _) = fit_dnn(&ds, &ds, &DnnConfig { epochs: 5, seed: 2, ..Default::default() }).unwrap();
        for m in [lrm, dnn] {
            let json = m.to_json();
            let back = Model::from_json(&json).unwrap();
            assert_eq!(back, m);
            for r in &ds.x {
                assert_eq!(back.predict_row(r).to_bits(), m.predict_row(r).to_bits());
            }
        }
    }

    #[test]
    fn json_layout() {
        let m = fit_lrm(&data()).unwrap();
        let v: serde_json::Value = serde_json::from_str(&m.to_json()).unwrap();
        assert_eq!(v["kind"], "lrm");
        assert_eq!(v["features"][2], "metric1");
        assert!(v["standardizer"]["means"].is_array());
        assert!(v["lrm"]["w"].is_array() && v["lrm"]["b"].is_number());
        assert!(v.get("dnn").is_none());

        let (d, _) = fit_dnn(&data(), &data(), &DnnConfig { epochs: 1, ..Default::default() }).unwrap();
        let v: serde_json::Value = serde_json::from_str(&d.to_json()).unwrap();
        assert_eq!(v["dnn"]["layers"].as_array().unwrap().len(), 3);
        assert_eq!(v["dnn"]["layers"][0]["W"].as_array().unwrap().len(), 16);
    }

    #[test]
    fn rejects_inconsistent_shapes() {
        let mut m = fit_lrm(&data()).unwrap();
        m.lrm.as_mut().unwrap().w.pop();
        assert!(matches!(Model::from_json(&m.to_json()), Err(LearnError::InvalidModel(_))));
        let (mut d, _) = fit_dnn(&data(), &data(), &DnnConfig { epochs: 1, ..Default::default() }).unwrap();
        d.dnn.as_mut().unwrap().layers[1].w[0].push(0.0);
        assert!(matches!(Model::from_json(&d.to_json()), Err(LearnError::InvalidModel(_))));
        assert!(matches!(Model::from_json("{\"kind\":\"svm\"}"), Err(LearnError::InvalidModel(_))));
    }
}
