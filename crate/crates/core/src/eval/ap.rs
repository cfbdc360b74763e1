use serde::{Deserialize, Serialize};

use crate::geom::{rotated_iou_bev, OrientedBox};
use crate::perception::nms::rank;
use crate::perception::Detection;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ApInterpolation {
    /// Exact area under the precision envelope.
    #[default]
    AllPoint,
    /// Mean envelope precision at recall 0, 0.1, ..., 1.
    ElevenPoint,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PrPoint {
    pub precision: f64,
    pub recall: f64,
    pub threshold: f64,
}

/// Confidence and TP flag per detection, plus the number of ground-truth
/// boxes. Lists from several frames concatenate before scoring.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct MatchResult {
    pub scored: Vec<(f64, bool)>,
    pub n_gt: usize,
}

impl MatchResult {
    pub fn extend(&mut self, other: MatchResult) {
        self.scored.extend(other.scored);
        self.n_gt += other.n_gt;
    }

    pub fn true_positives(&self) -> usize {
        self.scored.iter().filter(|s| s.1).count()
    }
}

/// Greedy matching in confidence order: each detection takes the unmatched
/// ground truth with the highest IoU, and is a true positive when that IoU
/// reaches `iou_threshold`.
pub fn match_detections(
    dets: &[Detection],
    gts: &[OrientedBox],
    iou_threshold: f64,
) -> MatchResult {
    let mut order: Vec<&Detection> = dets.iter().collect();
    order.sort_by(|a, b| rank(a, b));
    let mut taken = vec![false; gts.len()];
    let scored = order
        .into_iter()
        .map(|d| {
            let mut best: Option<(usize, f64)> = None;
            for (k, g) in gts.iter().enumerate() {
                if taken[k] {
                    continue;
                }
                let iou = rotated_iou_bev(&d.bbox, g);
                if best.is_none_or(|(_, b)| iou > b) {
                    best = Some((k, iou));
                }
            }
            match best {
                Some((k, iou)) if iou >= iou_threshold => {
                    taken[k] = true;
                    (d.confidence, true)
                }
                _ => (d.confidence, false),
            }
        })
        .collect();
    MatchResult {
        scored,
        n_gt: gts.len(),
    }
}

/// Precision and recall at each distinct confidence cut, highest first.
pub fn pr_curve(result: &MatchResult) -> Vec<PrPoint> {
    let mut s = result.scored.clone();
    s.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut out = Vec::new();
    let (mut tp, mut fp) = (0usize, 0usize);
    for k in 0..s.len() {
        if s[k].1 {
            tp += 1;
        } else {
            fp += 1;
        }
        // Tied confidences enter together.
        if k + 1 < s.len() && s[k + 1].0 == s[k].0 {
            continue;
        }
        out.push(PrPoint {
            precision: tp as f64 / (tp + fp) as f64,
            recall: if result.n_gt == 0 {
                0.0
            } else {
                tp as f64 / result.n_gt as f64
            },
            threshold: s[k].0,
        });
    }
    out
}

/// Average precision of a match result. No ground truth gives 0.
pub fn average_precision(result: &MatchResult, interpolation: ApInterpolation) -> f64 {
    if result.n_gt == 0 {
        return 0.0;
    }
    let pr = pr_curve(result);
    let mut envelope: Vec<f64> = pr.iter().map(|p| p.precision).collect();
    for k in (0..envelope.len().saturating_sub(1)).rev() {
        envelope[k] = envelope[k].max(envelope[k + 1]);
    }
    match interpolation {
        ApInterpolation::AllPoint => {
            let mut area = 0.0;
            let mut last_recall = 0.0;
            for (p, env) in pr.iter().zip(&envelope) {
                area += (p.recall - last_recall) * env;
                last_recall = p.recall;
            }
            area.clamp(0.0, 1.0)
        }
        ApInterpolation::ElevenPoint => {
            let sum: f64 = (0..=10)
                .map(|k| {
                    let r = k as f64 / 10.0;
                    pr.iter()
                        .zip(&envelope)
                        .find(|(p, _)| p.recall >= r - 1e-12)
                        .map_or(0.0, |(_, e)| *e)
                })
                .sum();
            sum / 11.0
        }
    }
}

pub fn match_and_ap(dets: &[Detection], gts: &[OrientedBox], iou_threshold: f64) -> f64 {
    average_precision(
        &match_detections(dets, gts, iou_threshold),
        ApInterpolation::AllPoint,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bx(x: f64) -> OrientedBox {
        OrientedBox::new([x, 0.0, 0.0], 4.0, 2.0, 1.5, 0.0).unwrap()
    }

    fn det(x: f64, conf: f64) -> Detection {
        Detection {
            bbox: bx(x),
            confidence: conf,
            source_cav: 0,
        }
    }

    #[test]
    fn perfect_detection() {
        // Shift of 0.2 m along a 4 m box: IoU 3.8 / 4.2.
        assert_eq!(match_and_ap(&[det(0.2, 0.5)], &[bx(0.0)], 0.7), 1.0);
    }

    #[test]
    fn no_detections() {
        assert_eq!(match_and_ap(&[], &[bx(0.0)], 0.5), 0.0);
    }

    #[test]
    fn ranking_matters() {
        let gt = [bx(0.0)];
        assert_eq!(
            match_and_ap(&[det(0.0, 0.9), det(50.0, 0.8)], &gt, 0.7),
            1.0
        );
        assert_eq!(
            match_and_ap(&[det(50.0, 0.9), det(0.0, 0.8)], &gt, 0.7),
            0.5
        );
    }

    #[test]
    fn duplicate_is_a_false_positive() {
        let m = match_detections(&[det(0.0, 0.9), det(0.1, 0.8)], &[bx(0.0)], 0.5);
        assert_eq!(m.scored, vec![(0.9, true), (0.8, false)]);
    }

    #[test]
    fn eleven_point_variant() {
        let m = match_detections(&[det(50.0, 0.9), det(0.0, 0.8)], &[bx(0.0)], 0.7);
        let ap = average_precision(&m, ApInterpolation::ElevenPoint);
        assert!((ap - 0.5).abs() < 1e-12);
    }
}
