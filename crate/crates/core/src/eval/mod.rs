//! Evaluation protocol, dataset statistics and the benchmark experiments.

pub mod ap;
pub mod experiment;
pub mod gt;
pub mod report;
pub mod stats;

use serde::{Deserialize, Serialize};

pub use ap::{
    average_precision, match_and_ap, match_detections, pr_curve, ApInterpolation, MatchResult,
    PrPoint,
};
pub use experiment::{evaluate, sweep_cav_count, sweep_compression, Evaluation};
pub use gt::{filter_gt, filter_gt_with};
pub use stats::{points_per_box_stats, polar_density, PointsPerBox, PolarHistogram};

use crate::comm::BROADCAST_RANGE_M;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvalConfig {
    pub x_range: [f64; 2],
    pub y_range: [f64; 2],
    pub iou_thresholds: Vec<f64>,
    pub comm_range_m: f64,
    /// Drop detections centred outside the range before matching.
    pub clip_detections: bool,
    pub interpolation: ApInterpolation,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            x_range: [-140.0, 140.0],
            y_range: [-40.0, 40.0],
            iou_thresholds: vec![0.5, 0.7],
            comm_range_m: BROADCAST_RANGE_M,
            clip_detections: true,
            interpolation: ApInterpolation::AllPoint,
        }
    }
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        let ordered = self.x_range[0] < self.x_range[1] && self.y_range[0] < self.y_range[1];
        let thresholds = !self.iou_thresholds.is_empty()
            && self.iou_thresholds.iter().all(|t| *t > 0.0 && *t <= 1.0);
        if ordered && thresholds && self.comm_range_m > 0.0 {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!(
                "invalid evaluation config {self:?}"
            )))
        }
    }
}
