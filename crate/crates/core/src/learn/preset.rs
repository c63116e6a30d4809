use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::LearnError;
use crate::features::Feature;

/// Named feature subsets used for training.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturePreset {
    /// Objective and subjective parameters together.
    All,
    DistDurHr,
    /// Heart rate only.
    Hr,
    AccWithMetrics,
    /// Acceleration-distribution moments only.
    Acc,
}

impl FeaturePreset {
    pub const ALL: [FeaturePreset; 5] = [
        FeaturePreset::All,
        FeaturePreset::DistDurHr,
        FeaturePreset::Hr,
        FeaturePreset::AccWithMetrics,
        FeaturePreset::Acc,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeaturePreset::All => "all",
            FeaturePreset::DistDurHr => "dist_dur_hr",
            FeaturePreset::Hr => "hr",
            FeaturePreset::AccWithMetrics => "acc_with_metrics",
            FeaturePreset::Acc => "acc",
        }
    }

    pub fn columns(self) -> Vec<Feature> {
        use Feature::*;
        match self {
            FeaturePreset::All => vec![
                Distance,
                Duration,
                Velocity,
                Pace,
                MetricD,
                Ahr,
                Mhr,
                AccStd,
                AccSkewness,
                AccKurtosis,
                Metric1,
                Metric2,
            ],
            FeaturePreset::DistDurHr => vec![Distance, Duration, Ahr, Mhr],
            FeaturePreset::Hr => vec![Ahr, Mhr],
            FeaturePreset::AccWithMetrics => vec![AccStd, AccSkewness, AccKurtosis, Metric1, Metric2],
            FeaturePreset::Acc => vec![AccStd, AccSkewness, AccKurtosis],
        }
    }
}

impl fmt::Display for FeaturePreset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeaturePreset {
    type Err = LearnError;

    fn from_str(s: &str) -> Result<Self, LearnError> {
        FeaturePreset::ALL
            .into_iter()
            .find(|p| p.name() == s.trim())
            .ok_or_else(|| LearnError::UnknownPreset(s.to_string()))
    }
}
