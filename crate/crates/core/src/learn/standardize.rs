use serde::{Deserialize, Serialize};

/// Per-feature z-scoring fitted on training rows.
///
/// A feature with (numerically) zero variance keeps `std = 0` and maps to 0.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    pub fn fit(x: &[Vec<f64>]) -> Self {
        let p = x.first().map_or(0, Vec::len);
        let n = x.len().max(1) as f64;
        let means: Vec<f64> = (0..p).map(|j| x.iter().map(|r| r[j]).sum::<f64>() / n).collect();
        let stds = (0..p)
            .map(|j| {
                let var = x.iter().map(|r| (r[j] - means[j]).powi(2)).sum::<f64>() / n;
                let sd = var.sqrt();
                if sd <= 1e-12 * (1.0 + means[j].abs()) {
                    0.0
                } else {
                    sd
                }
            })
            .collect();
        Standardizer { means, stds }
    }

    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn is_constant(&self, j: usize) -> bool {
        self.stds[j] == 0.0
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect()
    }

    pub fn transform(&self, x: &[Vec<f64>]) -> Vec<Vec<f64>> {
        x.iter().map(|r| self.transform_row(r)).collect()
    }

    pub fn inverse_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(z, (m, s))| m + z * s)
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_mean_unit_std() {
        let x: Vec<Vec<f64>> = (0..50)
            .map(|i| vec![i as f64 * 3.0 + 1.0, ((i * 37) % 11) as f64 - 100.0, 4.0])
            .collect();
        let s = Standardizer::fit(&x);
        let z = s.transform(&x);
        for j in 0..2 {
            let mean = z.iter().map(|r| r[j]).sum::<f64>() / 50.0;
            let var = z.iter().map(|r| (r[j] - mean).powi(2)).sum::<f64>() / 50.0;
            assert!(mean.abs() < 1e-9 && (var.sqrt() - 1.0).abs() < 1e-9);
        }
        assert!(s.is_constant(2));
        assert!(z.iter().all(|r| r[2] == 0.0));
        let back = s.inverse_row(&z[7]);
        assert!((back[0] - x[7][0]).abs() < 1e-12);
    }
}
