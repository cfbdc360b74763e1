use std::cmp::Ordering;

use super::detector::Detection;
use crate::geom::rotated_iou_bev;

/// Canonical ranking: descending confidence, then ascending box center
/// (x, y, z), then the remaining box parameters.
pub fn rank(a: &Detection, b: &Detection) -> Ordering {
    let (ba, bb) = (&a.bbox, &b.bbox);
    b.confidence
        .total_cmp(&a.confidence)
        .then(ba.center[0].total_cmp(&bb.center[0]))
        .then(ba.center[1].total_cmp(&bb.center[1]))
        .then(ba.center[2].total_cmp(&bb.center[2]))
        .then(ba.yaw.total_cmp(&bb.yaw))
        .then(ba.length.total_cmp(&bb.length))
        .then(ba.width.total_cmp(&bb.width))
        .then(ba.height.total_cmp(&bb.height))
        .then(a.source_cav.cmp(&b.source_cav))
}

/// Greedy suppression: a detection is dropped when its BEV IoU with an
/// already kept one reaches `iou_threshold`.
pub fn nms(dets: &[Detection], iou_threshold: f64) -> Vec<Detection> {
    assert!(
        iou_threshold > 0.0 && iou_threshold <= 1.0,
        "NMS threshold must be in (0, 1]"
    );
    let mut order: Vec<&Detection> = dets.iter().collect();
    order.sort_by(|a, b| rank(a, b));
    let mut kept: Vec<Detection> = Vec::new();
    for d in order {
        if kept
            .iter()
            .all(|k| rotated_iou_bev(&k.bbox, &d.bbox) < iou_threshold)
        {
            kept.push(d.clone());
        }
    }
    kept
}
