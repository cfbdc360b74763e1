//! The four fusion strategies run on one frame, with message accounting.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::attention::{attentive_fuse, AttentionParams};
use super::detector::{detect_with, DetectContext, Detection, DetectorConfig};
use super::features::{channel, extract_bev_features, BevFeatureMap, GridConfig};
use super::nms::nms;
use crate::comm::{
    build_comm_graph, decode_features, encode_features, transmit_time, Codec, CommGraph,
    CompressedBlob, LinkModel, BROADCAST_RANGE_M,
};
use crate::error::{Error, Result};
use crate::geom::{transform_points, FrameTransform, Point, PointCloud, Pose};
use crate::scenario::{sensor_frame_id, Frame};

/// Raw point on the wire: x, y, z, intensity as f32.
pub const BYTES_PER_POINT: u64 = 16;
/// Detection on the wire: 7 box values and a confidence as f32, a u32 id and
/// 4 bytes of framing.
pub const BYTES_PER_DETECTION: u64 = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    NoFusion,
    Early,
    Late,
    Intermediate,
}

impl Strategy {
    pub const ALL: [Strategy; 4] = [
        Strategy::NoFusion,
        Strategy::Early,
        Strategy::Late,
        Strategy::Intermediate,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::NoFusion => "no_fusion",
            Strategy::Early => "early",
            Strategy::Late => "late",
            Strategy::Intermediate => "intermediate",
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().replace('-', "_").as_str() {
            "no_fusion" | "nofusion" | "none" => Ok(Strategy::NoFusion),
            "early" => Ok(Strategy::Early),
            "late" => Ok(Strategy::Late),
            "intermediate" => Ok(Strategy::Intermediate),
            other => Err(Error::InvalidInput(format!("unknown strategy '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    pub grid: GridConfig,
    pub detector: DetectorConfig,
    pub codec: Codec,
    /// Exclude empty neighbour vectors from attention.
    pub attention_mask_empty: bool,
    pub link: LinkModel,
    pub comm_range_m: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            detector: DetectorConfig::default(),
            codec: Codec::default(),
            attention_mask_empty: false,
            link: LinkModel::default(),
            comm_range_m: BROADCAST_RANGE_M,
        }
    }
}

impl PipelineConfig {
    /// Settings used by the benchmark experiments: 0.625 m cells, which is
    /// fine enough for boxes to reach IoU 0.7.
    pub fn benchmark() -> Self {
        Self {
            grid: GridConfig::with_cell_size(0.625),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.codec.validate(channel::COUNT)?;
        if self.comm_range_m.is_nan()
            || self.comm_range_m <= 0.0
            || self.link.throughput_mbps.is_nan()
            || self.link.throughput_mbps <= 0.0
        {
            return Err(Error::InvalidInput(
                "range and throughput must be positive".into(),
            ));
        }
        if !(self.detector.nms_iou > 0.0 && self.detector.nms_iou <= 1.0) {
            return Err(Error::InvalidInput(
                "NMS threshold must be in (0, 1]".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    Points,
    Detections,
    Features,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Message {
    pub from: u32,
    pub to: u32,
    pub payload: Payload,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CommReport {
    pub strategy: Strategy,
    pub messages: Vec<Message>,
    pub total_bytes: u64,
    pub transmit_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineOutput {
    pub detections: Vec<Detection>,
    pub report: CommReport,
    /// Compressed feature messages (Intermediate only), by sender.
    pub blobs: BTreeMap<u32, CompressedBlob>,
}

/// Connectivity of a frame's CAVs from their reported poses.
pub fn frame_graph(frame: &Frame, range_m: f64) -> CommGraph {
    build_comm_graph(&frame.noisy_poses, range_m)
}

/// Ego plus its direct neighbours, ascending.
pub fn cavs_in_range(graph: &CommGraph, ego: u32) -> Vec<u32> {
    let mut ids = graph.neighbors(ego);
    ids.push(ego);
    ids.sort_unstable();
    ids
}

/// Ego-from-sender transform as the ego can estimate it from shared poses.
fn relative_pose(frame: &Frame, ego: u32, cav: u32) -> Pose {
    if cav == ego {
        Pose::identity()
    } else {
        frame.noisy_poses[&ego]
            .inverse()
            .compose(&frame.noisy_poses[&cav])
    }
}

fn project_cloud(frame: &Frame, ego: u32, cav: u32) -> Result<PointCloud> {
    let cloud = &frame.clouds[&cav];
    if cav == ego {
        return Ok(cloud.clone());
    }
    let t = FrameTransform::new(
        sensor_frame_id(ego),
        sensor_frame_id(cav),
        relative_pose(frame, ego, cav),
    );
    transform_points(&t, cloud)
}

/// Runs one strategy on one frame with a restricted CAV set. `cavs` is
/// intersected with the ego's neighbourhood, so the graph is always honoured.
pub fn run_pipeline_with(
    frame: &Frame,
    ego: u32,
    cavs: &[u32],
    strategy: Strategy,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    config.validate()?;
    frame.validate()?;
    if !frame.cav_ids.contains(&ego) {
        return Err(Error::UnknownCav(ego));
    }
    let graph = frame_graph(frame, config.comm_range_m);
    let mut members: Vec<u32> = cavs_in_range(&graph, ego)
        .into_iter()
        .filter(|c| *c == ego || cavs.contains(c))
        .collect();
    if strategy == Strategy::NoFusion {
        members = vec![ego];
    }
    let ego_frame = sensor_frame_id(ego);
    let viewpoints: Vec<[f64; 2]> = members
        .iter()
        .map(|&c| {
            let t = relative_pose(frame, ego, c).translation();
            [t[0], t[1]]
        })
        .collect();
    let ctx = DetectContext {
        source_cav: ego,
        viewpoints,
    };
    let mut messages = Vec::new();
    let mut blobs = BTreeMap::new();

    let detections = match strategy {
        Strategy::NoFusion | Strategy::Early => {
            let mut points: Vec<Point> = Vec::new();
            for &c in &members {
                let cloud = project_cloud(frame, ego, c)?;
                if c != ego {
                    messages.push(Message {
                        from: c,
                        to: ego,
                        payload: Payload::Points,
                        bytes: BYTES_PER_POINT * cloud.len() as u64,
                    });
                }
                points.extend(cloud.points);
            }
            let merged = PointCloud::new(ego_frame.clone(), points);
            let map = extract_bev_features(&merged, &config.grid, &ego_frame)?;
            detect_with(&map, &config.detector, &ctx)
        }
        Strategy::Late => {
            let local: Vec<(u32, Vec<Detection>)> = members
                .par_iter()
                .map(|&c| {
                    let own = sensor_frame_id(c);
                    let map = extract_bev_features(&frame.clouds[&c], &config.grid, &own)?;
                    let here = DetectContext {
                        source_cav: c,
                        viewpoints: vec![[0.0, 0.0]],
                    };
                    Ok((c, detect_with(&map, &config.detector, &here)))
                })
                .collect::<Result<_>>()?;
            let mut all = Vec::new();
            for (c, dets) in local {
                if c == ego {
                    all.extend(dets);
                    continue;
                }
                messages.push(Message {
                    from: c,
                    to: ego,
                    payload: Payload::Detections,
                    bytes: BYTES_PER_DETECTION * dets.len() as u64,
                });
                let rel = relative_pose(frame, ego, c);
                all.extend(dets.into_iter().map(|d| Detection {
                    bbox: rel.apply_box(&d.bbox),
                    ..d
                }));
            }
            nms(&all, config.detector.nms_iou)
        }
        Strategy::Intermediate => {
            let grid = config.grid;
            let encoded: Vec<(u32, BevFeatureMap, Option<Vec<u8>>)> = members
                .par_iter()
                .map(|&c| {
                    let cloud = project_cloud(frame, ego, c)?;
                    let map = extract_bev_features(&cloud, &grid, &ego_frame)?;
                    if c == ego {
                        return Ok((c, map, None));
                    }
                    let wire = encode_features(&map, &config.codec)?.to_bytes();
                    Ok((c, map, Some(wire)))
                })
                .collect::<Result<_>>()?;
            let mut maps = BTreeMap::new();
            for (c, map, wire) in encoded {
                match wire {
                    None => {
                        maps.insert(c, map);
                    }
                    Some(bytes) => {
                        messages.push(Message {
                            from: c,
                            to: ego,
                            payload: Payload::Features,
                            bytes: bytes.len() as u64,
                        });
                        let blob = CompressedBlob::from_bytes(&bytes, grid)?;
                        maps.insert(c, decode_features(&blob)?);
                        blobs.insert(c, blob);
                    }
                }
            }
            let mut params = AttentionParams::identity(channel::COUNT);
            params.mask_empty = config.attention_mask_empty;
            let fused = attentive_fuse(&maps, ego, &params)?;
            detect_with(&fused, &config.detector, &ctx)
        }
    };

    audit(&graph, &messages)?;
    let total_bytes = messages.iter().map(|m| m.bytes).sum();
    Ok(PipelineOutput {
        detections,
        report: CommReport {
            strategy,
            total_bytes,
            // Overhead is paid per message.
            transmit_time_s: messages
                .iter()
                .fold(0.0, |t, m| t + transmit_time(m.bytes, &config.link)),
            messages,
        },
        blobs,
    })
}

/// Runs one strategy with every CAV the ego can hear.
pub fn run_pipeline(
    frame: &Frame,
    ego: u32,
    strategy: Strategy,
    config: &PipelineConfig,
) -> Result<PipelineOutput> {
    run_pipeline_with(frame, ego, &frame.cav_ids, strategy, config)
}

/// Every message must travel along a graph edge.
pub fn audit(graph: &CommGraph, messages: &[Message]) -> Result<()> {
    for m in messages {
        if m.from == m.to || !graph.connected(m.from, m.to) {
            return Err(Error::Invariant(format!(
                "message {} -> {} crosses no communication link",
                m.from, m.to
            )));
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::templates::{ids, occluded_crossing};
    use crate::scenario::SensorConfig;

    #[test]
    fn strategy_names_round_trip() {
        for s in Strategy::ALL {
            assert_eq!(s.name().parse::<Strategy>().unwrap(), s);
        }
        assert!("fancy".parse::<Strategy>().is_err());
    }

    #[test]
    fn audit_rejects_non_edges() {
        let poses = BTreeMap::from([
            (0, Pose::identity()),
            (1, Pose::from_xy_yaw(100.0, 0.0, 0.0, 0.0)),
        ]);
        let g = build_comm_graph(&poses, 70.0);
        let m = Message {
            from: 1,
            to: 0,
            payload: Payload::Points,
            bytes: 1,
        };
        assert!(matches!(audit(&g, &[m]), Err(Error::Invariant(_))));
    }

    #[test]
    fn occluded_car_found_only_with_cooperation() {
        let scene = occluded_crossing(3, SensorConfig::default());
        let frame = &scene.frames[0];
        let config = PipelineConfig::benchmark();
        let world = frame.vehicle(ids::CROSSING).unwrap().bbox;
        let target = frame.true_poses[&ids::EGO].inverse().apply_box(&world);
        let found = |s: Strategy| {
            run_pipeline(frame, ids::EGO, s, &config)
                .unwrap()
                .detections
                .iter()
                .any(|d| crate::geom::rotated_iou_bev(&d.bbox, &target) > 0.3)
        };
        assert!(!found(Strategy::NoFusion));
        assert!(found(Strategy::Early));
        assert!(found(Strategy::Intermediate));
    }

    #[test]
    fn default_codec_beats_raw_points() {
        let scene = occluded_crossing(5, SensorConfig::default());
        let frame = &scene.frames[0];
        assert!(frame.clouds[&ids::HELPER_CAV].len() >= 1000);
        let config = PipelineConfig::default();
        let early = run_pipeline(frame, ids::EGO, Strategy::Early, &config).unwrap();
        let inter = run_pipeline(frame, ids::EGO, Strategy::Intermediate, &config).unwrap();
        assert!(inter.report.total_bytes < early.report.total_bytes);
    }
}
