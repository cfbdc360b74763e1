//! Dataset statistics: where ground truth sits around the ego and how many
//! points land on it.

use std::f64::consts::TAU;

use serde::Serialize;

use super::gt::{filter_gt_with, points_in_boxes};
use super::EvalConfig;
use crate::error::{Error, Result};
use crate::geom::OrientedBox;
use crate::perception::pipeline::{cavs_in_range, frame_graph};
use crate::scenario::Frame;

pub const POLAR_MAX_RADIUS: f64 = 140.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PolarHistogram {
    pub angle_edges: Vec<f64>,
    pub radius_edges: Vec<f64>,
    /// counts[angle][radius]
    pub counts: Vec<Vec<u64>>,
    /// ln(1 + count), same layout.
    pub log_counts: Vec<Vec<f64>>,
}

impl PolarHistogram {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn angular_marginal(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }
}

/// Histogram of box centers (ego frame) by bearing in [0, 2pi) and range in
/// [0, 140] m. Centers beyond 140 m fall in the outermost ring, so the bins
/// always partition the input.
pub fn polar_density(
    gts: &[OrientedBox],
    n_angle_bins: usize,
    n_radius_bins: usize,
) -> Result<PolarHistogram> {
    if n_angle_bins == 0 || n_radius_bins == 0 {
        return Err(Error::InvalidInput(
            "polar histogram needs at least one bin per axis".into(),
        ));
    }
    let mut counts = vec![vec![0u64; n_radius_bins]; n_angle_bins];
    for b in gts {
        let [x, y, _] = b.center;
        let bearing = y.atan2(x).rem_euclid(TAU);
        let a = ((bearing / TAU * n_angle_bins as f64) as usize).min(n_angle_bins - 1);
        let r = ((x.hypot(y) / POLAR_MAX_RADIUS * n_radius_bins as f64) as usize)
            .min(n_radius_bins - 1);
        counts[a][r] += 1;
    }
    let log_counts = counts
        .iter()
        .map(|row| row.iter().map(|c| (*c as f64).ln_1p()).collect())
        .collect();
    Ok(PolarHistogram {
        angle_edges: (0..=n_angle_bins)
            .map(|k| TAU * k as f64 / n_angle_bins as f64)
            .collect(),
        radius_edges: (0..=n_radius_bins)
            .map(|k| POLAR_MAX_RADIUS * k as f64 / n_radius_bins as f64)
            .collect(),
        counts,
        log_counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoxPoints {
    pub radius: f64,
    pub ego_points: usize,
    pub all_points: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct RadialBin {
    pub radius_lo: f64,
    pub radius_hi: f64,
    pub boxes: usize,
    pub ego_points: u64,
    pub all_points: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct PointsPerBox {
    pub boxes: Vec<BoxPoints>,
    pub bins: Vec<RadialBin>,
}

pub const RADIAL_BIN_M: f64 = 20.0;

/// Points inside each ground-truth box from the ego alone and from all
/// connected CAVs, binned by distance from the ego in 20 m rings.
pub fn points_per_box_stats(frames: &[(&Frame, u32)], config: &EvalConfig) -> PointsPerBox {
    let mut out = PointsPerBox::default();
    for (frame, ego) in frames {
        let graph = frame_graph(frame, config.comm_range_m);
        let cavs = cavs_in_range(&graph, *ego);
        let gts = filter_gt_with(frame, *ego, &cavs, config);
        let from_ego = frame.true_poses[ego];
        let world: Vec<OrientedBox> = gts.iter().map(|b| from_ego.apply_box(b)).collect();
        let counts = points_in_boxes(frame, &world, &cavs);
        let ego_col = cavs
            .iter()
            .position(|c| c == ego)
            .expect("ego is in range of itself");
        for (b, c) in gts.iter().zip(counts) {
            out.boxes.push(BoxPoints {
                radius: b.center[0].hypot(b.center[1]),
                ego_points: c[ego_col],
                all_points: c.iter().sum(),
            });
        }
    }
    if out.boxes.is_empty() {
        return out;
    }
    let n_bins = (POLAR_MAX_RADIUS / RADIAL_BIN_M).ceil() as usize;
    out.bins = (0..n_bins)
        .map(|k| RadialBin {
            radius_lo: k as f64 * RADIAL_BIN_M,
            radius_hi: (k + 1) as f64 * RADIAL_BIN_M,
            ..RadialBin::default()
        })
        .collect();
    for b in &out.boxes {
        let k = ((b.radius / RADIAL_BIN_M) as usize).min(n_bins - 1);
        let bin = &mut out.bins[k];
        bin.boxes += 1;
        bin.ego_points += b.ego_points as u64;
        bin.all_points += b.all_points as u64;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn at(x: f64, y: f64) -> OrientedBox {
        OrientedBox::new([x, y, 0.0], 4.5, 2.0, 1.6, 0.0).unwrap()
    }

    #[test]
    fn single_box_ahead() {
        let h = polar_density(&[at(10.0, 0.0)], 36, 14).unwrap();
        assert_eq!(h.total(), 1);
        assert_eq!(h.counts[0][1], 1);
        assert_eq!(h.counts.iter().flatten().filter(|c| **c > 0).count(), 1);
        assert!((h.log_counts[0][1] - 2f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn mass_is_conserved_past_the_edge() {
        let h = polar_density(&[at(139.0, 30.0), at(-5.0, -5.0), at(0.0, 0.0)], 8, 7).unwrap();
        assert_eq!(h.total(), 3);
        assert!(polar_density(&[], 0, 3).is_err());
    }

    #[test]
    fn empty_scene_is_empty() {
        let s = points_per_box_stats(&[], &EvalConfig::default());
        assert!(s.boxes.is_empty() && s.bins.is_empty());
    }
}
