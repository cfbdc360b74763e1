//! Seeded multi-vehicle scenes, their persistence and summary statistics.

pub mod dataset;
pub mod road;
pub mod stats;
pub mod templates;

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{rotated_iou_bev, OrientedBox, PointCloud, Pose};
use crate::lidar::{self, LidarSpec, LocalizationNoise};
use crate::rng::{self, tag};

pub use dataset::{read_dataset, write_dataset, Manifest};
pub use road::{build_layout, Lane, LaneKind, RoadLayout};
pub use stats::{dataset_stats, DatasetStats};

/// Seconds between frames.
pub const FRAME_DT: f64 = 0.1;
pub const MIN_CAVS: u32 = 2;
pub const MAX_CAVS: u32 = 7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum RoadType {
    FourWay,
    TIntersection,
    Straight,
    Curvy,
    Midblock,
    Ramp,
}

impl RoadType {
    pub const ALL: [RoadType; 6] = [
        RoadType::FourWay,
        RoadType::TIntersection,
        RoadType::Straight,
        RoadType::Curvy,
        RoadType::Midblock,
        RoadType::Ramp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            RoadType::FourWay => "4-way intersection",
            RoadType::TIntersection => "T intersection",
            RoadType::Straight => "straight segment",
            RoadType::Curvy => "curvy segment",
            RoadType::Midblock => "midblock",
            RoadType::Ramp => "entrance ramp",
        }
    }

    pub fn traffic(self) -> &'static RoadTypeStats {
        &ROAD_TYPE_TABLE[self as usize]
    }
}

impl fmt::Display for RoadType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Per-road-type traffic statistics the sampler targets (mean, std pairs).
#[derive(Debug, Clone, Copy)]
pub struct RoadTypeStats {
    pub share_pct: f64,
    pub length_s: (f64, f64),
    pub cav_count: (f64, f64),
    pub density: (f64, f64),
    pub traffic_speed_kmh: (f64, f64),
    pub cav_speed_kmh: (f64, f64),
    pub aggressiveness: (f64, f64),
}

pub const ROAD_TYPE_TABLE: [RoadTypeStats; 6] = [
    RoadTypeStats {
        share_pct: 24.5,
        length_s: (12.5, 4.2),
        cav_count: (2.69, 0.67),
        density: (29.6, 26.1),
        traffic_speed_kmh: (19.3, 8.8),
        cav_speed_kmh: (21.3, 10.2),
        aggressiveness: (0.09, 0.30),
    },
    RoadTypeStats {
        share_pct: 24.1,
        length_s: (14.3, 12.8),
        cav_count: (2.55, 1.3),
        density: (27.9, 18.65),
        traffic_speed_kmh: (26.3, 7.5),
        cav_speed_kmh: (26.2, 10.0),
        aggressiveness: (0.11, 0.32),
    },
    RoadTypeStats {
        share_pct: 20.7,
        length_s: (20.2, 12.7),
        cav_count: (3.54, 1.21),
        density: (38.0, 36.3),
        traffic_speed_kmh: (45.7, 14.8),
        cav_speed_kmh: (54.3, 20.1),
        aggressiveness: (0.82, 0.40),
    },
    RoadTypeStats {
        share_pct: 23.3,
        length_s: (17.8, 6.8),
        cav_count: (2.86, 0.95),
        density: (19.1, 9.2),
        traffic_speed_kmh: (45.8, 15.1),
        cav_speed_kmh: (51.6, 19.2),
        aggressiveness: (0.50, 0.51),
    },
    RoadTypeStats {
        share_pct: 4.7,
        length_s: (10.0, 1.3),
        cav_count: (3.00, 1.22),
        density: (21.8, 8.2),
        traffic_speed_kmh: (45.1, 8.3),
        cav_speed_kmh: (50.7, 11.5),
        aggressiveness: (0.20, 0.44),
    },
    RoadTypeStats {
        share_pct: 2.7,
        length_s: (9.3, 0.9),
        cav_count: (2.67, 0.57),
        density: (20.3, 2.8),
        traffic_speed_kmh: (54.8, 1.7),
        cav_speed_kmh: (66.7, 4.8),
        aggressiveness: (0.67, 0.57),
    },
];

/// Overall CAV count statistics across all scenarios.
pub const CAV_COUNT_MEAN: f64 = 2.89;
pub const CAV_COUNT_STD: f64 = 1.06;
/// Mean of the latent Gaussian (std `CAV_COUNT_STD`) whose rounded and
/// [2, 7]-clamped values have mean `CAV_COUNT_MEAN`.
pub const CAV_LATENT_MEAN: f64 = 2.7537;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SensorConfig {
    #[serde(default)]
    pub lidar: LidarSpec,
    #[serde(default)]
    pub localization: LocalizationNoise,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub road_type: RoadType,
    pub n_vehicles: u32,
    pub n_cavs: u32,
    pub duration_frames: u32,
    pub traffic_speed_kmh: f64,
    /// Carried through for bookkeeping; motion is constant-speed lane following.
    #[serde(default)]
    pub aggressiveness: f64,
    pub seed: u64,
    #[serde(default)]
    pub sensor: SensorConfig,
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        let max_cavs = MAX_CAVS.min(self.n_vehicles);
        if self.n_cavs < MIN_CAVS || self.n_cavs > max_cavs {
            return Err(Error::InvalidInput(format!(
                "n_cavs {} outside [{MIN_CAVS}, {max_cavs}]",
                self.n_cavs
            )));
        }
        if self.duration_frames < 1 {
            return Err(Error::InvalidInput(
                "duration must be at least one frame".into(),
            ));
        }
        if !(self.traffic_speed_kmh.is_finite() && self.traffic_speed_kmh >= 0.0) {
            return Err(Error::InvalidInput(
                "traffic speed must be non-negative".into(),
            ));
        }
        self.sensor.lidar.validate()
    }

    pub fn label(&self) -> String {
        format!(
            "{:?}(vehicles={}, cavs={}, frames={}, seed={})",
            self.road_type, self.n_vehicles, self.n_cavs, self.duration_frames, self.seed
        )
    }
}

fn gaussian(rng: &mut ChaCha8Rng, mean: f64, std: f64) -> f64 {
    Normal::new(mean, std).expect("finite std").sample(rng)
}

/// Draws a scenario configuration following the road-type traffic table.
pub fn sample_config(master_seed: u64) -> ScenarioConfig {
    let mut rng = rng::stream(master_seed, &[tag::CONFIG]);
    let u: f64 = rng.random_range(0.0..100.0);
    let mut acc = 0.0;
    let mut road_type = RoadType::Ramp;
    for rt in RoadType::ALL {
        acc += rt.traffic().share_pct;
        if u < acc {
            road_type = rt;
            break;
        }
    }
    let stats = road_type.traffic();
    let n_cavs = gaussian(&mut rng, CAV_LATENT_MEAN, CAV_COUNT_STD)
        .round()
        .clamp(MIN_CAVS as f64, MAX_CAVS as f64) as u32;
    let density = gaussian(&mut rng, stats.density.0, stats.density.1).round();
    let n_vehicles = (density.max(0.0) as u32).clamp(n_cavs, 120);
    let length_s = gaussian(&mut rng, stats.length_s.0, stats.length_s.1).max(FRAME_DT);
    let speed = gaussian(
        &mut rng,
        stats.traffic_speed_kmh.0,
        stats.traffic_speed_kmh.1,
    )
    .max(0.0);
    let aggr = gaussian(&mut rng, stats.aggressiveness.0, stats.aggressiveness.1).clamp(0.0, 1.0);
    ScenarioConfig {
        road_type,
        n_vehicles,
        n_cavs,
        duration_frames: ((length_s / FRAME_DT).round() as u32).max(1),
        traffic_speed_kmh: f32_exact(speed),
        aggressiveness: f32_exact(aggr),
        seed: rng.random(),
        sensor: SensorConfig::default(),
    }
}

/// Rounds to the nearest `f32`, the precision every persisted value is held at.
pub fn f32_exact(v: f64) -> f64 {
    v as f32 as f64
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Vehicle {
    pub id: u32,
    pub bbox: OrientedBox,
    pub velocity: [f64; 2],
}

#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    pub index: u32,
    pub timestamp_s: f64,
    pub vehicles: Vec<Vehicle>,
    pub cav_ids: Vec<u32>,
    /// Sensor (LiDAR) poses in the world frame.
    pub true_poses: BTreeMap<u32, Pose>,
    /// Poses as reported by each CAV's GPS/IMU.
    pub noisy_poses: BTreeMap<u32, Pose>,
    /// Per-CAV sweep in that CAV's sensor frame.
    pub clouds: BTreeMap<u32, PointCloud>,
}

impl Frame {
    pub fn vehicle(&self, id: u32) -> Option<&Vehicle> {
        self.vehicles.iter().find(|v| v.id == id)
    }

    pub fn validate(&self) -> Result<()> {
        for id in &self.cav_ids {
            if self.vehicle(*id).is_none() {
                return Err(Error::Invariant(format!("CAV {id} is not a vehicle")));
            }
            if !(self.true_poses.contains_key(id)
                && self.noisy_poses.contains_key(id)
                && self.clouds.contains_key(id))
            {
                return Err(Error::Invariant(format!("CAV {id} lacks a pose or cloud")));
            }
        }
        Ok(())
    }
}

pub fn sensor_frame_id(cav: u32) -> String {
    format!("cav_{cav}")
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub ego_id: u32,
    pub frames: Vec<Frame>,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        for (k, f) in self.frames.iter().enumerate() {
            f.validate()?;
            if !f.cav_ids.contains(&self.ego_id) {
                return Err(Error::Invariant(format!("ego missing from frame {k}")));
            }
            let expected = f32_exact(k as f64 * FRAME_DT);
            if f.timestamp_s != expected {
                return Err(Error::Invariant(format!(
                    "frame {k} timestamp {}",
                    f.timestamp_s
                )));
            }
        }
        Ok(())
    }
}

/// A vehicle's motion: constant speed along a lane from arc length `s0`.
#[derive(Debug, Clone)]
pub struct VehiclePlan {
    pub id: u32,
    pub lane: usize,
    pub s0: f64,
    pub speed_mps: f64,
    pub dims: [f64; 3],
}

impl VehiclePlan {
    fn state(&self, layout: &RoadLayout, frame: u32) -> ([f64; 2], f64) {
        layout.lanes[self.lane].point_at(self.s0 + self.speed_mps * frame as f64 * FRAME_DT)
    }

    fn bbox_at(&self, layout: &RoadLayout, frame: u32) -> OrientedBox {
        let (p, yaw) = self.state(layout, frame);
        let [l, w, h] = self.dims;
        OrientedBox {
            center: [f32_exact(p[0]), f32_exact(p[1]), f32_exact(h / 2.0)],
            length: l,
            width: w,
            height: h,
            yaw: f32_exact(yaw),
        }
    }
}

/// Nominal vehicle dimensions (length, width, height) and relative spread.
pub const VEHICLE_DIMS: [f64; 3] = [4.5, 2.0, 1.6];
pub const VEHICLE_DIM_SPREAD: f64 = 0.15;
/// Longitudinal clearance kept between vehicles (m).
pub const MIN_GAP: f64 = 1.5;
/// Vehicles are placed within this radius of the template origin.
pub const PLACEMENT_RADIUS: f64 = 140.0;
const PLACEMENT_ATTEMPTS: usize = 400;

fn sample_dims(rng: &mut ChaCha8Rng) -> [f64; 3] {
    let sigma = VEHICLE_DIM_SPREAD / 2.0;
    VEHICLE_DIMS.map(|d| {
        // Truncated Gaussian by rejection.
        loop {
            let z = gaussian(rng, 0.0, sigma);
            if z.abs() <= VEHICLE_DIM_SPREAD {
                return f32_exact(d * (1.0 + z));
            }
        }
    })
}

fn clearance_box(b: &OrientedBox) -> OrientedBox {
    OrientedBox {
        length: b.length + MIN_GAP,
        width: b.width + 0.6,
        ..*b
    }
}

fn conflicts(a: &VehiclePlan, b: &VehiclePlan, layout: &RoadLayout, frames: u32) -> bool {
    (0..frames).any(|t| {
        let (ba, bb) = (a.bbox_at(layout, t), b.bbox_at(layout, t));
        rotated_iou_bev(&clearance_box(&ba), &bb) > 0.0
            || rotated_iou_bev(&ba, &clearance_box(&bb)) > 0.0
    })
}

/// Places vehicles on the template lanes with no pairwise overlap in any of
/// the first `frames` frames. Every vehicle must stay on its lane that long,
/// so long fast scenes only fit with a short horizon.
pub fn plan_vehicles(
    config: &ScenarioConfig,
    layout: &RoadLayout,
    frames: u32,
) -> Result<Vec<VehiclePlan>> {
    let mut rng = rng::stream(config.seed, &[tag::LAYOUT]);
    let base_speed = config.traffic_speed_kmh / 3.6;
    let lane_speeds: Vec<f64> = layout
        .lanes
        .iter()
        .map(|l| match l.kind {
            LaneKind::Parking => 0.0,
            LaneKind::Travel => {
                f32_exact(gaussian(&mut rng, base_speed, 0.1 * base_speed).max(0.0))
            }
        })
        .collect();
    let weights: Vec<f64> = layout
        .lanes
        .iter()
        .map(|l| match l.kind {
            LaneKind::Travel => l.length(),
            LaneKind::Parking => 0.6 * l.length(),
        })
        .collect();
    let total: f64 = weights.iter().sum();
    let mut plans: Vec<VehiclePlan> = Vec::with_capacity(config.n_vehicles as usize);
    for id in 0..config.n_vehicles {
        let dims = sample_dims(&mut rng);
        let mut placed = None;
        for _ in 0..PLACEMENT_ATTEMPTS {
            let mut u = rng.random_range(0.0..total);
            let mut lane = 0;
            while lane + 1 < weights.len() && u >= weights[lane] {
                u -= weights[lane];
                lane += 1;
            }
            let l = &layout.lanes[lane];
            let travel = lane_speeds[lane] * (frames.saturating_sub(1)) as f64 * FRAME_DT;
            let lo = dims[0] / 2.0;
            let hi = l.length() - dims[0] / 2.0 - travel;
            if hi <= lo {
                continue;
            }
            let cand = VehiclePlan {
                id,
                lane,
                s0: f32_exact(rng.random_range(lo..hi)),
                speed_mps: lane_speeds[lane],
                dims,
            };
            let (p, _) = cand.state(layout, 0);
            if p[0].hypot(p[1]) > PLACEMENT_RADIUS {
                continue;
            }
            if plans.iter().all(|o| !conflicts(&cand, o, layout, frames)) {
                placed = Some(cand);
                break;
            }
        }
        match placed {
            Some(p) => plans.push(p),
            None => {
                return Err(Error::InfeasiblePlacement {
                    config: config.label(),
                    reason: format!("vehicle {id} could not be placed without overlap"),
                })
            }
        }
    }
    Ok(plans)
}

/// Picks the ego near the template origin and the other CAVs among vehicles
/// in communication range of it, falling back to the nearest vehicles.
fn choose_cavs(
    config: &ScenarioConfig,
    plans: &[VehiclePlan],
    layout: &RoadLayout,
) -> (u32, Vec<u32>) {
    let mut rng = rng::stream(config.seed, &[tag::EGO]);
    let pos: Vec<[f64; 2]> = plans.iter().map(|p| p.state(layout, 0).0).collect();
    let moving: Vec<usize> = (0..plans.len())
        .filter(|&i| plans[i].speed_mps > 0.0)
        .collect();
    let pool = if moving.is_empty() {
        (0..plans.len()).collect()
    } else {
        moving
    };
    let mut by_origin = pool.clone();
    by_origin.sort_by(|&a, &b| {
        pos[a][0]
            .hypot(pos[a][1])
            .total_cmp(&pos[b][0].hypot(pos[b][1]))
    });
    let near: Vec<usize> = by_origin
        .iter()
        .copied()
        .take(4.max(by_origin.len() / 4))
        .collect();
    let ego = near[rng.random_range(0..near.len())];
    let dist = |i: usize| (pos[i][0] - pos[ego][0]).hypot(pos[i][1] - pos[ego][1]);
    let mut others: Vec<usize> = (0..plans.len()).filter(|&i| i != ego).collect();
    // Random order among candidates within 60 m, then the rest by distance.
    let mut keyed: Vec<(bool, f64, usize)> = others
        .drain(..)
        .map(|i| {
            let d = dist(i);
            let in_range = d <= 60.0 && plans[i].speed_mps > 0.0;
            (!in_range, if in_range { rng.random::<f64>() } else { d }, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    let mut cavs = vec![plans[ego].id];
    cavs.extend(
        keyed
            .iter()
            .take(config.n_cavs as usize - 1)
            .map(|k| plans[k.2].id),
    );
    cavs.sort_unstable();
    (plans[ego].id, cavs)
}

/// Sensor pose of a vehicle box: the LiDAR sits `mount_height` above the
/// ground under the box center.
pub fn sensor_pose_for(b: &OrientedBox, mount_height: f64) -> Pose {
    Pose::from_xy_yaw(b.center[0], b.center[1], f32_exact(mount_height), b.yaw)
}

/// Builds the frames of a scene from explicit vehicle boxes per frame.
pub fn render_frames(
    config: &ScenarioConfig,
    boxes_per_frame: &[Vec<Vehicle>],
    cav_ids: &[u32],
) -> Vec<Frame> {
    let spec = &config.sensor.lidar;
    let rays = lidar::generate_rays(spec);
    boxes_per_frame
        .par_iter()
        .enumerate()
        .map(|(t, vehicles)| {
            let mut true_poses = BTreeMap::new();
            let mut noisy_poses = BTreeMap::new();
            let mut clouds = BTreeMap::new();
            for &cav in cav_ids {
                let own = vehicles
                    .iter()
                    .find(|v| v.id == cav)
                    .expect("cav is a vehicle");
                let pose = sensor_pose_for(&own.bbox, spec.mount_height);
                let others: Vec<OrientedBox> = vehicles
                    .iter()
                    .filter(|v| v.id != cav)
                    .map(|v| v.bbox)
                    .collect();
                let clean =
                    lidar::raycast_frame(&pose, &rays, &others, spec, &sensor_frame_id(cav));
                let noise_seed =
                    rng::derive_seed(config.seed, &[tag::RANGE_NOISE, t as u64, cav as u64]);
                let mut cloud =
                    lidar::apply_range_noise(&clean, spec.range_noise_sigma, noise_seed);
                cloud.quantize_f32();
                let pose_seed =
                    rng::derive_seed(config.seed, &[tag::POSE_NOISE, t as u64, cav as u64]);
                let noisy = lidar::perturb_pose(&pose, &config.sensor.localization, pose_seed);
                let [x, y, z] = noisy.translation();
                let noisy = Pose::from_xy_yaw(
                    f32_exact(x),
                    f32_exact(y),
                    f32_exact(z),
                    f32_exact(noisy.yaw()),
                );
                true_poses.insert(cav, pose);
                noisy_poses.insert(cav, noisy);
                clouds.insert(cav, cloud);
            }
            Frame {
                index: t as u32,
                timestamp_s: f32_exact(t as f64 * FRAME_DT),
                vehicles: vehicles.clone(),
                cav_ids: cav_ids.to_vec(),
                true_poses,
                noisy_poses,
                clouds,
            }
        })
        .collect()
}

pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario> {
    generate_scenario_capped(config, None)
}

/// Like [`generate_scenario`] but renders at most `max_frames` frames. The
/// config keeps its full duration; traffic is planned for all of it.
pub fn generate_scenario_capped(
    config: &ScenarioConfig,
    max_frames: Option<u32>,
) -> Result<Scenario> {
    config.validate()?;
    if max_frames == Some(0) {
        return Err(Error::InvalidInput("frame cap must be at least 1".into()));
    }
    let rendered = config.duration_frames.min(max_frames.unwrap_or(u32::MAX));
    let layout = build_layout(config.road_type);
    let plans = plan_vehicles(config, &layout, rendered)?;
    let (ego_id, cav_ids) = choose_cavs(config, &plans, &layout);
    let boxes: Vec<Vec<Vehicle>> = (0..rendered)
        .map(|t| {
            plans
                .iter()
                .map(|p| {
                    let bbox = p.bbox_at(&layout, t);
                    let v = p.speed_mps;
                    Vehicle {
                        id: p.id,
                        bbox,
                        velocity: [f32_exact(v * bbox.yaw.cos()), f32_exact(v * bbox.yaw.sin())],
                    }
                })
                .collect()
        })
        .collect();
    let frames = render_frames(config, &boxes, &cav_ids);
    Ok(Scenario {
        config: config.clone(),
        ego_id,
        frames,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(road_type: RoadType, n_vehicles: u32, seed: u64) -> ScenarioConfig {
        ScenarioConfig {
            road_type,
            n_vehicles,
            n_cavs: 2,
            duration_frames: 3,
            traffic_speed_kmh: 30.0,
            aggressiveness: 0.0,
            seed,
            sensor: SensorConfig::default(),
        }
    }

    #[test]
    fn config_validation() {
        let mut c = small_config(RoadType::Straight, 5, 1);
        assert!(c.validate().is_ok());
        c.n_cavs = 1;
        assert!(c.validate().is_err());
        c.n_cavs = 6;
        assert!(c.validate().is_err());
        c.n_cavs = 2;
        c.duration_frames = 0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn sampled_cav_counts_in_bounds() {
        for s in 0..2000 {
            let c = sample_config(s);
            assert!((MIN_CAVS..=MAX_CAVS).contains(&c.n_cavs));
            assert!(c.n_vehicles >= c.n_cavs);
            c.validate().unwrap();
        }
    }

    #[test]
    fn two_vehicles_on_straight_road() {
        let cfg = small_config(RoadType::Straight, 2, 7);
        let s = generate_scenario(&cfg).unwrap();
        let layout = build_layout(RoadType::Straight);
        for f in &s.frames {
            let (a, b) = (&f.vehicles[0].bbox, &f.vehicles[1].bbox);
            assert_eq!(rotated_iou_bev(a, b), 0.0);
            for v in &f.vehicles {
                let c = [v.bbox.center[0], v.bbox.center[1]];
                let on_center = layout.lanes.iter().any(|l| l.lateral_distance(c) < 1e-4);
                assert!(on_center);
            }
        }
        s.validate().unwrap();
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small_config(RoadType::FourWay, 12, 99);
        assert_eq!(
            generate_scenario(&cfg).unwrap(),
            generate_scenario(&cfg).unwrap()
        );
    }

    #[test]
    fn infeasible_density_is_reported() {
        let mut cfg = small_config(RoadType::Ramp, 2000, 5);
        cfg.n_cavs = 2;
        match plan_vehicles(&cfg, &build_layout(cfg.road_type), cfg.duration_frames) {
            Err(Error::InfeasiblePlacement { config, .. }) => assert!(config.contains("Ramp")),
            other => panic!("expected infeasible placement, got {other:?}"),
        }
    }
}
