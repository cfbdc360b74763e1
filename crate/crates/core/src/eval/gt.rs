use std::collections::HashMap;

use super::EvalConfig;
use crate::geom::OrientedBox;
use crate::perception::pipeline::{cavs_in_range, frame_graph};
use crate::scenario::Frame;

const BUCKET_M: f64 = 8.0;

fn in_range(b: &OrientedBox, config: &EvalConfig) -> bool {
    let [x, y, _] = b.center;
    (config.x_range[0]..=config.x_range[1]).contains(&x)
        && (config.y_range[0]..=config.y_range[1]).contains(&y)
}

/// Uniform x-y hash of world boxes for point lookups.
struct BoxIndex {
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl BoxIndex {
    fn new(boxes: &[OrientedBox]) -> Self {
        let mut buckets: HashMap<(i64, i64), Vec<usize>> = HashMap::new();
        for (k, b) in boxes.iter().enumerate() {
            let r = 0.5 * b.length.hypot(b.width);
            let lo = Self::key(b.center[0] - r, b.center[1] - r);
            let hi = Self::key(b.center[0] + r, b.center[1] + r);
            for i in lo.0..=hi.0 {
                for j in lo.1..=hi.1 {
                    buckets.entry((i, j)).or_default().push(k);
                }
            }
        }
        Self { buckets }
    }

    fn key(x: f64, y: f64) -> (i64, i64) {
        ((x / BUCKET_M).floor() as i64, (y / BUCKET_M).floor() as i64)
    }

    fn candidates(&self, x: f64, y: f64) -> &[usize] {
        self.buckets
            .get(&Self::key(x, y))
            .map_or(&[], |v| v.as_slice())
    }
}

/// Points from each of `cavs` (true poses) falling in each box, per box and CAV.
pub fn points_in_boxes(frame: &Frame, boxes: &[OrientedBox], cavs: &[u32]) -> Vec<Vec<usize>> {
    let index = BoxIndex::new(boxes);
    let mut counts = vec![vec![0usize; cavs.len()]; boxes.len()];
    for (n, cav) in cavs.iter().enumerate() {
        let pose = frame.true_poses[cav];
        for p in &frame.clouds[cav].points {
            let w = pose.apply(p.xyz());
            for &k in index.candidates(w[0], w[1]) {
                if boxes[k].contains(w) {
                    counts[k][n] += 1;
                }
            }
        }
    }
    counts
}

/// Ground truth in the ego frame seen by an explicit CAV set: boxes centred in
/// the evaluation range and hit by at least one of their points. The ego's
/// own box is never a target.
pub fn filter_gt_with(
    frame: &Frame,
    ego: u32,
    cavs: &[u32],
    config: &EvalConfig,
) -> Vec<OrientedBox> {
    let to_ego = frame.true_poses[&ego].inverse();
    let candidates: Vec<(OrientedBox, OrientedBox)> = frame
        .vehicles
        .iter()
        .filter(|v| v.id != ego)
        .map(|v| (v.bbox, to_ego.apply_box(&v.bbox)))
        .filter(|(_, local)| in_range(local, config))
        .collect();
    let world: Vec<OrientedBox> = candidates.iter().map(|c| c.0).collect();
    let hits = points_in_boxes(frame, &world, cavs);
    candidates
        .into_iter()
        .zip(hits)
        .filter(|(_, h)| h.iter().any(|n| *n > 0))
        .map(|((_, local), _)| local)
        .collect()
}

/// Ground truth for the CAVs connected to the ego.
pub fn filter_gt(frame: &Frame, ego: u32, config: &EvalConfig) -> Vec<OrientedBox> {
    let graph = frame_graph(frame, config.comm_range_m);
    filter_gt_with(frame, ego, &cavs_in_range(&graph, ego), config)
}

/// Drops detections centred outside the evaluation range.
pub fn clip_to_range<T>(
    items: Vec<T>,
    bbox: impl Fn(&T) -> &OrientedBox,
    config: &EvalConfig,
) -> Vec<T> {
    items
        .into_iter()
        .filter(|d| in_range(bbox(d), config))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::templates::{ids, occluded_crossing};
    use crate::scenario::SensorConfig;

    #[test]
    fn occluded_vehicle_needs_the_helper() {
        let s = occluded_crossing(2, SensorConfig::default());
        let f = &s.frames[0];
        let cfg = EvalConfig::default();
        let crossing = f.true_poses[&ids::EGO]
            .inverse()
            .apply_box(&f.vehicle(ids::CROSSING).unwrap().bbox);
        let has = |gts: &[OrientedBox]| gts.iter().any(|b| b.center == crossing.center);
        assert!(has(&filter_gt(f, ids::EGO, &cfg)));
        assert!(!has(&filter_gt_with(f, ids::EGO, &[ids::EGO], &cfg)));
        let ego_only = filter_gt_with(f, ids::EGO, &[ids::EGO], &cfg);
        let both = filter_gt(f, ids::EGO, &cfg);
        for b in &ego_only {
            assert!(both.contains(b));
        }
    }

    #[test]
    fn far_vehicles_are_out_of_range() {
        let s = occluded_crossing(2, SensorConfig::default());
        let mut f = s.frames[0].clone();
        let cfg = EvalConfig {
            x_range: [-10.0, 10.0],
            ..EvalConfig::default()
        };
        // Only the parked truck just ahead of the ego remains within 10 m.
        let gts = filter_gt(&f, ids::EGO, &cfg);
        assert!(gts.iter().all(|b| b.center[0].abs() <= 10.0));
        f.vehicles.retain(|v| v.id == ids::EGO);
        assert!(filter_gt(&f, ids::EGO, &cfg).is_empty());
    }
}
