//! Benchmark experiments: strategy comparison, CAV-count sweep and
//! compression sweep, plus the seeded scene suites they run on.

use rayon::prelude::*;
use serde::Serialize;

use super::ap::{average_precision, match_detections, MatchResult};
use super::gt::{clip_to_range, filter_gt_with};
use super::EvalConfig;
use crate::comm::Codec;
use crate::error::{Error, Result};
use crate::geom::OrientedBox;
use crate::lidar::LocalizationNoise;
use crate::perception::pipeline::{
    cavs_in_range, frame_graph, run_pipeline_with, PipelineConfig, PipelineOutput, Strategy,
};
use crate::perception::Detection;
use crate::rng;
use crate::scenario::{generate_scenario, Frame, RoadType, Scenario, ScenarioConfig, SensorConfig};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdAp {
    pub iou_threshold: f64,
    pub ap: f64,
    pub true_positives: usize,
    pub detections: usize,
    pub ground_truth: usize,
}

pub fn ap_at(aps: &[ThresholdAp], iou_threshold: f64) -> Option<f64> {
    aps.iter()
        .find(|a| a.iou_threshold == iou_threshold)
        .map(|a| a.ap)
}

/// One (frame, strategy, threshold) outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrameRow {
    pub scenario: usize,
    pub frame: u32,
    pub strategy: Strategy,
    pub iou_threshold: f64,
    pub ground_truth: usize,
    pub detections: usize,
    pub true_positives: usize,
    pub ap: f64,
    pub messages: usize,
    pub bytes: u64,
    pub transmit_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StrategySummary {
    pub strategy: Strategy,
    pub aps: Vec<ThresholdAp>,
    pub frames: usize,
    pub messages: usize,
    pub bytes: u64,
    pub transmit_time_s: f64,
    pub mean_message_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Evaluation {
    pub rows: Vec<FrameRow>,
    pub summary: Vec<StrategySummary>,
}

impl Evaluation {
    pub fn ap(&self, strategy: Strategy, iou_threshold: f64) -> Option<f64> {
        self.summary
            .iter()
            .find(|s| s.strategy == strategy)
            .and_then(|s| ap_at(&s.aps, iou_threshold))
    }
}

/// Running totals for one table cell.
#[derive(Debug, Clone, Default)]
struct Tally {
    matches: Vec<MatchResult>,
    frames: usize,
    messages: usize,
    bytes: u64,
    transmit_time_s: f64,
}

impl Tally {
    fn new(thresholds: usize) -> Self {
        Self {
            matches: vec![MatchResult::default(); thresholds],
            ..Self::default()
        }
    }

    fn add(&mut self, outcome: &FrameOutcome) {
        for (m, o) in self.matches.iter_mut().zip(&outcome.matches) {
            m.extend(o.clone());
        }
        self.frames += 1;
        self.messages += outcome.output.report.messages.len();
        self.bytes += outcome.output.report.total_bytes;
        self.transmit_time_s += outcome.output.report.transmit_time_s;
    }

    fn aps(&self, eval: &EvalConfig) -> Vec<ThresholdAp> {
        eval.iou_thresholds
            .iter()
            .zip(&self.matches)
            .map(|(t, m)| ThresholdAp {
                iou_threshold: *t,
                ap: average_precision(m, eval.interpolation),
                true_positives: m.true_positives(),
                detections: m.scored.len(),
                ground_truth: m.n_gt,
            })
            .collect()
    }

    fn mean_message_bytes(&self) -> f64 {
        if self.messages == 0 {
            0.0
        } else {
            self.bytes as f64 / self.messages as f64
        }
    }
}

struct FrameOutcome {
    output: PipelineOutput,
    matches: Vec<MatchResult>,
}

fn score(dets: &[Detection], gts: &[OrientedBox], eval: &EvalConfig) -> Vec<MatchResult> {
    let dets = if eval.clip_detections {
        clip_to_range(dets.to_vec(), |d| &d.bbox, eval)
    } else {
        dets.to_vec()
    };
    eval.iou_thresholds
        .iter()
        .map(|t| match_detections(&dets, gts, *t))
        .collect()
}

fn run_and_score(
    frame: &Frame,
    ego: u32,
    cavs: &[u32],
    gts: &[OrientedBox],
    strategy: Strategy,
    pipeline: &PipelineConfig,
    eval: &EvalConfig,
) -> Result<FrameOutcome> {
    let output = run_pipeline_with(frame, ego, cavs, strategy, pipeline)?;
    let matches = score(&output.detections, gts, eval);
    Ok(FrameOutcome { output, matches })
}

fn frame_units(scenarios: &[Scenario]) -> Vec<(usize, usize)> {
    scenarios
        .iter()
        .enumerate()
        .flat_map(|(s, sc)| (0..sc.frames.len()).map(move |f| (s, f)))
        .collect()
}

fn check_strategies(strategies: &[Strategy]) -> Result<()> {
    if strategies.is_empty() {
        return Err(Error::InvalidInput("strategy list is empty".into()));
    }
    Ok(())
}

/// Runs every strategy on every frame. Rows come out in (scenario, frame,
/// strategy, threshold) order whatever the thread count.
pub fn evaluate(
    scenarios: &[Scenario],
    strategies: &[Strategy],
    pipeline: &PipelineConfig,
    eval: &EvalConfig,
) -> Result<Evaluation> {
    check_strategies(strategies)?;
    eval.validate()?;
    let per_frame: Vec<Vec<FrameOutcome>> = frame_units(scenarios)
        .par_iter()
        .map(|&(s, f)| {
            let sc = &scenarios[s];
            let frame = &sc.frames[f];
            let graph = frame_graph(frame, eval.comm_range_m);
            let cavs = cavs_in_range(&graph, sc.ego_id);
            let gts = filter_gt_with(frame, sc.ego_id, &cavs, eval);
            strategies
                .iter()
                .map(|st| {
                    run_and_score(frame, sc.ego_id, &frame.cav_ids, &gts, *st, pipeline, eval)
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut tallies = vec![Tally::new(eval.iou_thresholds.len()); strategies.len()];
    let mut rows = Vec::new();
    for ((s, f), outcomes) in frame_units(scenarios).into_iter().zip(&per_frame) {
        for ((st, outcome), tally) in strategies.iter().zip(outcomes).zip(tallies.iter_mut()) {
            tally.add(outcome);
            let report = &outcome.output.report;
            for (t, m) in eval.iou_thresholds.iter().zip(&outcome.matches) {
                rows.push(FrameRow {
                    scenario: s,
                    frame: scenarios[s].frames[f].index,
                    strategy: *st,
                    iou_threshold: *t,
                    ground_truth: m.n_gt,
                    detections: m.scored.len(),
                    true_positives: m.true_positives(),
                    ap: average_precision(m, eval.interpolation),
                    messages: report.messages.len(),
                    bytes: report.total_bytes,
                    transmit_time_s: report.transmit_time_s,
                });
            }
        }
    }
    let summary = strategies
        .iter()
        .zip(&tallies)
        .map(|(st, t)| StrategySummary {
            strategy: *st,
            aps: t.aps(eval),
            frames: t.frames,
            messages: t.messages,
            bytes: t.bytes,
            transmit_time_s: t.transmit_time_s,
            mean_message_bytes: t.mean_message_bytes(),
        })
        .collect();
    Ok(Evaluation { rows, summary })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CavSweepRow {
    pub n_cavs: usize,
    pub strategy: Strategy,
    pub aps: Vec<ThresholdAp>,
    pub bytes: u64,
}

/// Ego first, then the other CAVs by increasing distance from the ego in the
/// first frame (ties by id). Prefixes of this order are the nested subsets of
/// the CAV sweep, so the group grows outward from the ego.
pub fn cav_order(scenario: &Scenario) -> Vec<u32> {
    let mut order = vec![scenario.ego_id];
    let Some(frame) = scenario.frames.first() else {
        return order;
    };
    let origin = frame
        .true_poses
        .get(&scenario.ego_id)
        .map(|p| p.translation());
    let dist = |id: u32| match (origin, frame.true_poses.get(&id)) {
        (Some(o), Some(p)) => {
            let t = p.translation();
            (t[0] - o[0]).hypot(t[1] - o[1])
        }
        _ => f64::INFINITY,
    };
    let mut rest: Vec<(f64, u32)> = frame
        .cav_ids
        .iter()
        .copied()
        .filter(|c| *c != scenario.ego_id)
        .map(|c| (dist(c), c))
        .collect();
    rest.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    order.extend(rest.into_iter().map(|(_, c)| c));
    order
}

/// AP as the CAV set grows along nested subsets. Ground truth is fixed to
/// what the full CAV set can see, so every count is scored on the same boxes.
pub fn sweep_cav_count(
    scenarios: &[Scenario],
    counts: &[usize],
    strategies: &[Strategy],
    pipeline: &PipelineConfig,
    eval: &EvalConfig,
) -> Result<Vec<CavSweepRow>> {
    check_strategies(strategies)?;
    eval.validate()?;
    if counts.is_empty() || counts.contains(&0) {
        return Err(Error::InvalidInput("CAV counts must be positive".into()));
    }
    let units = frame_units(scenarios);
    let per_frame: Vec<Vec<Vec<FrameOutcome>>> = units
        .par_iter()
        .map(|&(s, f)| {
            let sc = &scenarios[s];
            let frame = &sc.frames[f];
            let order = cav_order(sc);
            let graph = frame_graph(frame, eval.comm_range_m);
            let gts = filter_gt_with(frame, sc.ego_id, &cavs_in_range(&graph, sc.ego_id), eval);
            counts
                .iter()
                .map(|&k| {
                    let subset = &order[..k.min(order.len())];
                    strategies
                        .iter()
                        .map(|st| {
                            run_and_score(frame, sc.ego_id, subset, &gts, *st, pipeline, eval)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let mut rows = Vec::new();
    for (ci, &k) in counts.iter().enumerate() {
        for (si, st) in strategies.iter().enumerate() {
            let mut tally = Tally::new(eval.iou_thresholds.len());
            for outcomes in &per_frame {
                tally.add(&outcomes[ci][si]);
            }
            rows.push(CavSweepRow {
                n_cavs: k,
                strategy: *st,
                aps: tally.aps(eval),
                bytes: tally.bytes,
            });
        }
    }
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionRow {
    pub codec: String,
    pub nominal_rate: f64,
    /// Dense map bytes over payload bytes, as measured on the messages.
    pub rate: f64,
    pub aps: Vec<ThresholdAp>,
    pub messages: usize,
    /// Wire bytes over all messages.
    pub bytes: u64,
    pub transmit_time_s: f64,
    pub mean_message_bytes: f64,
    pub mean_message_time_s: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub strategy: Strategy,
    pub aps: Vec<ThresholdAp>,
    pub messages: usize,
    pub bytes: u64,
    pub transmit_time_s: f64,
    pub mean_message_bytes: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CompressionSweep {
    pub rows: Vec<CompressionRow>,
    pub references: Vec<ReferenceRow>,
}

/// Intermediate fusion across a codec ladder, with the other strategies'
/// AP and traffic as reference lines. Rows are sorted by nominal rate.
pub fn sweep_compression(
    scenarios: &[Scenario],
    ladder: &[Codec],
    pipeline: &PipelineConfig,
    eval: &EvalConfig,
) -> Result<CompressionSweep> {
    eval.validate()?;
    if ladder.is_empty() {
        return Err(Error::InvalidInput("codec ladder is empty".into()));
    }
    let channels = crate::perception::channel::COUNT;
    let mut ladder = ladder.to_vec();
    ladder.sort_by(|a, b| {
        a.nominal_rate(channels)
            .total_cmp(&b.nominal_rate(channels))
    });
    let mut rows = Vec::new();
    for codec in &ladder {
        let cfg = PipelineConfig {
            codec: *codec,
            ..pipeline.clone()
        };
        let ev = evaluate(scenarios, &[Strategy::Intermediate], &cfg, eval)?;
        let s = &ev.summary[0];
        let rate = measured_rate(&cfg)?;
        rows.push(CompressionRow {
            codec: codec.label(),
            nominal_rate: codec.nominal_rate(channels),
            rate,
            aps: s.aps.clone(),
            messages: s.messages,
            bytes: s.bytes,
            transmit_time_s: s.transmit_time_s,
            mean_message_bytes: s.mean_message_bytes,
            mean_message_time_s: if s.messages == 0 {
                0.0
            } else {
                s.transmit_time_s / s.messages as f64
            },
        });
    }
    let refs = evaluate(
        scenarios,
        &[Strategy::NoFusion, Strategy::Early, Strategy::Late],
        pipeline,
        eval,
    )?;
    let references = refs
        .summary
        .into_iter()
        .map(|s| ReferenceRow {
            strategy: s.strategy,
            aps: s.aps,
            messages: s.messages,
            bytes: s.bytes,
            transmit_time_s: s.transmit_time_s,
            mean_message_bytes: s.mean_message_bytes,
        })
        .collect();
    Ok(CompressionSweep { rows, references })
}

/// Compression rate of a feature message; every message under one codec and
/// grid has the same size.
fn measured_rate(cfg: &PipelineConfig) -> Result<f64> {
    let channels = crate::perception::channel::COUNT;
    let dense = (cfg.grid.rows() * cfg.grid.cols() * channels * 4) as f64;
    let probe = crate::perception::BevFeatureMap::zeros(cfg.grid, channels);
    let blob = crate::comm::encode_features(&probe, &cfg.codec)?;
    Ok(dense / blob.payload_bytes() as f64)
}

/// Benchmark sensor: ground returns on so raw clouds carry realistic point
/// counts, and exact localization. Heading error of even a fraction of a
/// degree displaces far objects by more than an IoU 0.7 match tolerates,
/// which no hand-built detector can undo; `SensorConfig::default()` keeps
/// the noisy setting for the sampled dataset.
pub fn suite_sensor() -> SensorConfig {
    let mut sensor = SensorConfig::default();
    sensor.lidar.ground_returns = true;
    sensor.localization = LocalizationNoise::none();
    sensor
}

/// Occlusion-heavy scenes: T junctions and dense four-way traffic with
/// three to five CAVs and two frames each.
pub fn occlusion_suite(seed: u64, n: usize) -> Vec<ScenarioConfig> {
    (0..n)
        .map(|k| {
            let s = rng::derive_seed(seed, &[rng::tag::CONFIG, 0x5017E, k as u64]);
            let (road_type, n_vehicles) = if k % 2 == 0 {
                (RoadType::TIntersection, 45 + (s % 16) as u32)
            } else {
                (RoadType::FourWay, 70 + (s % 21) as u32)
            };
            ScenarioConfig {
                road_type,
                n_vehicles,
                n_cavs: 3 + (k % 3) as u32,
                duration_frames: 2,
                traffic_speed_kmh: road_type.traffic().traffic_speed_kmh.0,
                aggressiveness: 0.5,
                seed: s,
                sensor: suite_sensor(),
            }
        })
        .collect()
}

/// Busy four-way junctions with 150 vehicles and the maximum of 7 CAVs.
pub fn cav_sweep_suite(seed: u64, n: usize) -> Vec<ScenarioConfig> {
    (0..n)
        .map(|k| ScenarioConfig {
            road_type: RoadType::FourWay,
            n_vehicles: 150,
            n_cavs: crate::scenario::MAX_CAVS,
            duration_frames: 1,
            traffic_speed_kmh: RoadType::FourWay.traffic().traffic_speed_kmh.0,
            aggressiveness: 0.5,
            seed: rng::derive_seed(seed, &[rng::tag::CONFIG, 0xCA75, k as u64]),
            sensor: suite_sensor(),
        })
        .collect()
}

pub fn generate_all(configs: &[ScenarioConfig]) -> Result<Vec<Scenario>> {
    configs.par_iter().map(generate_scenario).collect()
}
