//! Spinning LiDAR simulation: ray layout, ray casting against vehicle boxes,
//! range noise and localization noise.
//!
//! Intensity is synthetic (`1 - d / max_range`); there is no material model.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{normalize_angle, OrientedBox, Point, PointCloud, Pose};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LidarSpec {
    pub channels: u32,
    /// Lower and upper elevation limits in degrees.
    pub vertical_fov_deg: [f64; 2],
    pub max_range: f64,
    pub points_per_second: u64,
    pub rotation_hz: f64,
    /// Standard deviation of the along-ray range error (m).
    pub range_noise_sigma: f64,
    /// Sensor height above the ground under the vehicle center (m).
    pub mount_height: f64,
    /// Intersect rays with the z = 0 ground plane.
    pub ground_returns: bool,
}

impl Default for LidarSpec {
    fn default() -> Self {
        Self {
            channels: 64,
            vertical_fov_deg: [-25.0, 5.0],
            max_range: 120.0,
            points_per_second: 1_300_000,
            rotation_hz: 10.0,
            range_noise_sigma: 0.02,
            mount_height: 1.9,
            ground_returns: false,
        }
    }
}

impl LidarSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = self.channels >= 1
            && self.vertical_fov_deg[0] < self.vertical_fov_deg[1]
            && self.max_range > 0.0
            && self.range_noise_sigma >= 0.0
            && self.rotation_hz > 0.0
            && self.points_per_second > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidInput(format!("invalid lidar spec {self:?}")))
        }
    }

    pub fn azimuth_steps(&self) -> usize {
        let per_rev = self.points_per_second as f64 / (self.rotation_hz * self.channels as f64);
        (per_rev.round() as usize).max(1)
    }

    pub fn elevations_rad(&self) -> Vec<f64> {
        let [lo, hi] = self.vertical_fov_deg;
        let n = self.channels as usize;
        if n == 1 {
            return vec![((lo + hi) / 2.0).to_radians()];
        }
        let step = (hi - lo) / (n - 1) as f64;
        (0..n)
            .map(|k| (lo + step * k as f64).to_radians())
            .collect()
    }
}

/// GPS/IMU error model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizationNoise {
    pub position_sigma: f64,
    pub heading_sigma_deg: f64,
}

impl Default for LocalizationNoise {
    fn default() -> Self {
        Self {
            position_sigma: 0.02,
            heading_sigma_deg: 2.0,
        }
    }
}

impl LocalizationNoise {
    pub fn none() -> Self {
        Self {
            position_sigma: 0.0,
            heading_sigma_deg: 0.0,
        }
    }
}

/// Unit directions in the sensor frame, azimuth-major: ray `a * channels + c`.
#[derive(Debug, Clone, PartialEq)]
pub struct RaySet {
    pub channels: usize,
    pub azimuth_steps: usize,
    pub directions: Vec<[f64; 3]>,
}

impl RaySet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }
}

pub fn generate_rays(spec: &LidarSpec) -> RaySet {
    let az_steps = spec.azimuth_steps();
    let elevations = spec.elevations_rad();
    let mut directions = Vec::with_capacity(az_steps * elevations.len());
    for a in 0..az_steps {
        let az = 2.0 * PI * a as f64 / az_steps as f64;
        let (sa, ca) = az.sin_cos();
        for &el in &elevations {
            let (se, ce) = el.sin_cos();
            directions.push([ce * ca, ce * sa, se]);
        }
    }
    RaySet {
        channels: elevations.len(),
        azimuth_steps: az_steps,
        directions,
    }
}

/// Distance along the ray to the box surface, if the ray starts outside the box.
fn ray_box_hit(origin: [f64; 3], dir: [f64; 3], b: &OrientedBox) -> Option<f64> {
    let (s, c) = b.yaw.sin_cos();
    let ox = origin[0] - b.center[0];
    let oy = origin[1] - b.center[1];
    let o = [c * ox + s * oy, -s * ox + c * oy, origin[2] - b.center[2]];
    let d = [c * dir[0] + s * dir[1], -s * dir[0] + c * dir[1], dir[2]];
    let half = [b.length / 2.0, b.width / 2.0, b.height / 2.0];
    let mut t_near = f64::NEG_INFINITY;
    let mut t_far = f64::INFINITY;
    for k in 0..3 {
        if d[k].abs() < 1e-15 {
            if o[k].abs() > half[k] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d[k];
        let (t0, t1) = {
            let a = (-half[k] - o[k]) * inv;
            let b = (half[k] - o[k]) * inv;
            if a < b {
                (a, b)
            } else {
                (b, a)
            }
        };
        t_near = t_near.max(t0);
        t_far = t_far.min(t1);
        if t_near > t_far {
            return None;
        }
    }
    // Origin inside the box (the sensor's own vehicle) is not a hit.
    (t_near > 0.0).then_some(t_near)
}

/// Per azimuth column, the boxes whose bounding circle overlaps it.
fn column_candidates(
    sensor_pose: &Pose,
    boxes: &[OrientedBox],
    az_steps: usize,
    max_range: f64,
) -> Vec<Vec<u32>> {
    let mut cols: Vec<Vec<u32>> = vec![Vec::new(); az_steps];
    let planar = sensor_pose.is_planar();
    let inv = sensor_pose.inverse();
    let step = 2.0 * PI / az_steps as f64;
    for (i, b) in boxes.iter().enumerate() {
        let radius = 0.5 * b.length.hypot(b.width);
        let local = inv.apply(b.center);
        let dist = local[0].hypot(local[1]);
        if dist - radius > max_range {
            continue;
        }
        if !planar || dist <= radius + 1e-9 {
            cols.iter_mut().for_each(|c| c.push(i as u32));
            continue;
        }
        let center_az = local[1].atan2(local[0]);
        let half = (radius / dist).min(1.0).asin() + step;
        let lo = ((center_az - half) / step).floor() as i64;
        let hi = ((center_az + half) / step).ceil() as i64;
        for k in lo..=hi {
            cols[k.rem_euclid(az_steps as i64) as usize].push(i as u32);
        }
    }
    for c in &mut cols {
        c.dedup();
    }
    cols
}

/// Casts every ray, returning `(ray_index, point)` pairs in ray order.
pub fn raycast_indexed(
    sensor_pose: &Pose,
    rays: &RaySet,
    boxes: &[OrientedBox],
    spec: &LidarSpec,
) -> Vec<(usize, Point)> {
    let origin = sensor_pose.translation();
    let cols = column_candidates(sensor_pose, boxes, rays.azimuth_steps, spec.max_range);
    let per_column: Vec<Vec<(usize, Point)>> = cols
        .par_iter()
        .enumerate()
        .map(|(a, cands)| {
            let mut out = Vec::new();
            for ch in 0..rays.channels {
                let idx = a * rays.channels + ch;
                let d_sensor = rays.directions[idx];
                let d = sensor_pose.rotate(d_sensor);
                let mut best = f64::INFINITY;
                for &bi in cands {
                    if let Some(t) = ray_box_hit(origin, d, &boxes[bi as usize]) {
                        best = best.min(t);
                    }
                }
                if spec.ground_returns && d[2] < 0.0 && origin[2] > 0.0 {
                    best = best.min(-origin[2] / d[2]);
                }
                if best <= spec.max_range {
                    out.push((
                        idx,
                        Point {
                            x: d_sensor[0] * best,
                            y: d_sensor[1] * best,
                            z: d_sensor[2] * best,
                            intensity: 1.0 - best / spec.max_range,
                        },
                    ));
                }
            }
            out
        })
        .collect();
    per_column.into_iter().flatten().collect()
}

/// Noise-free sweep expressed in the sensor frame `frame_id`.
pub fn raycast_frame(
    sensor_pose: &Pose,
    rays: &RaySet,
    boxes: &[OrientedBox],
    spec: &LidarSpec,
    frame_id: &str,
) -> PointCloud {
    let points = raycast_indexed(sensor_pose, rays, boxes, spec)
        .into_iter()
        .map(|(_, p)| p)
        .collect();
    PointCloud::new(frame_id, points)
}

/// Moves each point along its sensor ray by a Gaussian range error.
/// The cloud must be in the sensor frame.
pub fn apply_range_noise(cloud: &PointCloud, sigma: f64, seed: u64) -> PointCloud {
    if sigma == 0.0 {
        return cloud.clone();
    }
    let normal = Normal::new(0.0, sigma).expect("sigma validated non-negative");
    let mut rng = rng::stream(seed, &[rng::tag::RANGE_NOISE]);
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let n: f64 = normal.sample(&mut rng);
            let r = (p.x * p.x + p.y * p.y + p.z * p.z).sqrt();
            if r == 0.0 {
                return *p;
            }
            let k = 1.0 + n / r;
            Point {
                x: p.x * k,
                y: p.y * k,
                z: p.z * k,
                intensity: p.intensity,
            }
        })
        .collect();
    PointCloud::new(cloud.frame_id.clone(), points)
}

/// Jitters the horizontal position and the heading.
pub fn perturb_pose(pose: &Pose, noise: &LocalizationNoise, seed: u64) -> Pose {
    if noise.position_sigma == 0.0 && noise.heading_sigma_deg == 0.0 {
        return *pose;
    }
    let mut rng = rng::stream(seed, &[rng::tag::POSE_NOISE]);
    let pos = Normal::new(0.0, noise.position_sigma).expect("non-negative sigma");
    let head = Normal::new(0.0, noise.heading_sigma_deg.to_radians()).expect("non-negative sigma");
    let dx: f64 = pos.sample(&mut rng);
    let dy: f64 = pos.sample(&mut rng);
    let dyaw: f64 = head.sample(&mut rng);
    let [x, y, z] = pose.translation();
    Pose::new(
        [x + dx, y + dy, z],
        normalize_angle(pose.yaw() + dyaw),
        pose.pitch(),
        pose.roll(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    fn flat_spec() -> LidarSpec {
        LidarSpec {
            channels: 1,
            vertical_fov_deg: [-1.0, 1.0],
            points_per_second: 3600,
            rotation_hz: 1.0,
            range_noise_sigma: 0.0,
            ..LidarSpec::default()
        }
    }

    #[test]
    fn single_channel_fan() {
        let spec = LidarSpec {
            points_per_second: 360,
            ..flat_spec()
        };
        let rays = generate_rays(&spec);
        assert_eq!(rays.len(), 360);
        assert!(rays.directions.iter().all(|d| d[2].abs() < 1e-12));
        for d in &rays.directions {
            assert!((d[0] * d[0] + d[1] * d[1] + d[2] * d[2] - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn default_ray_layout() {
        let spec = LidarSpec::default();
        assert_eq!(spec.azimuth_steps(), 2031);
        let rays = generate_rays(&spec);
        assert_eq!(rays.len(), 64 * 2031);
        let el = spec.elevations_rad();
        let step = (el[1] - el[0]).to_degrees();
        assert!((step - 30.0 / 63.0).abs() < 1e-12);
        assert!((step - 0.476).abs() < 1e-3);
        assert!((el[0].to_degrees() + 25.0).abs() < 1e-12);
        assert!((el[63].to_degrees() - 5.0).abs() < 1e-9);
    }

    #[test]
    fn empty_scene_gives_empty_cloud() {
        let spec = LidarSpec::default();
        let rays = generate_rays(&spec);
        let cloud = raycast_frame(
            &Pose::from_xy_yaw(0.0, 0.0, 1.9, 0.0),
            &rays,
            &[],
            &spec,
            "s",
        );
        assert!(cloud.is_empty());
    }

    #[test]
    fn box_ahead_on_axis() {
        let spec = flat_spec();
        let rays = RaySet {
            channels: 1,
            azimuth_steps: 1,
            directions: vec![[1.0, 0.0, 0.0]],
        };
        let b = OrientedBox::new([10.0, 0.0, 0.0], 4.5, 2.0, 1.6, 0.0).unwrap();
        let cloud = raycast_frame(&Pose::identity(), &rays, &[b], &spec, "s");
        assert_eq!(cloud.len(), 1);
        assert!((cloud.points[0].x - (10.0 - 2.25)).abs() < 1e-12);
        assert!((cloud.points[0].intensity - (1.0 - 7.75 / 120.0)).abs() < 1e-12);
    }

    #[test]
    fn occluded_box_gets_no_points() {
        let spec = LidarSpec {
            ground_returns: false,
            ..LidarSpec::default()
        };
        let rays = generate_rays(&spec);
        let pose = Pose::from_xy_yaw(0.0, 0.0, 1.0, 0.0);
        let front = OrientedBox::new([10.0, 0.0, 1.0], 2.0, 6.0, 4.0, 0.0).unwrap();
        let hidden = OrientedBox::new([20.0, 0.0, 1.0], 2.0, 6.0, 4.0, 0.0).unwrap();
        let cloud = raycast_frame(&pose, &rays, &[front, hidden], &spec, "s");
        let world = |p: &Point| pose.apply(p.xyz());
        assert!(cloud.points.iter().any(|p| front.contains(world(p))));
        assert!(!cloud.points.iter().any(|p| hidden.contains(world(p))));
    }

    #[test]
    fn sensor_inside_box_ignores_it() {
        let spec = flat_spec();
        let rays = generate_rays(&spec);
        let own = OrientedBox::new([0.0, 0.0, 0.0], 4.5, 2.0, 1.6, 0.0).unwrap();
        let cloud = raycast_frame(&Pose::identity(), &rays, &[own], &spec, "s");
        assert!(cloud.is_empty());
    }

    #[test]
    fn ground_plane_is_optional() {
        let mut spec = LidarSpec::default();
        let rays = generate_rays(&spec);
        let pose = Pose::from_xy_yaw(0.0, 0.0, 1.9, 0.0);
        assert!(raycast_frame(&pose, &rays, &[], &spec, "s").is_empty());
        spec.ground_returns = true;
        let cloud = raycast_frame(&pose, &rays, &[], &spec, "s");
        assert!(!cloud.is_empty());
        assert!(cloud.points.iter().all(|p| (p.z + 1.9).abs() < 1e-9));
    }

    #[test]
    fn zero_sigma_noise_is_identity() {
        let cloud = PointCloud::new(
            "s",
            vec![Point {
                x: 3.0,
                y: 4.0,
                z: 0.0,
                intensity: 0.5,
            }],
        );
        assert_eq!(apply_range_noise(&cloud, 0.0, 9), cloud);
        let p = Pose::from_xy_yaw(1.0, 2.0, 0.0, 0.3);
        assert_eq!(perturb_pose(&p, &LocalizationNoise::none(), 9), p);
    }

    #[test]
    fn noise_is_deterministic_per_seed() {
        let cloud = PointCloud::new(
            "s",
            (1..50)
                .map(|i| Point {
                    x: i as f64,
                    y: 1.0,
                    z: -0.5,
                    intensity: 0.5,
                })
                .collect(),
        );
        assert_eq!(
            apply_range_noise(&cloud, 0.02, 5),
            apply_range_noise(&cloud, 0.02, 5)
        );
        assert_ne!(
            apply_range_noise(&cloud, 0.02, 5),
            apply_range_noise(&cloud, 0.02, 6)
        );
        let p = Pose::from_xy_yaw(1.0, 2.0, 0.0, 0.3);
        let n = LocalizationNoise::default();
        assert_eq!(perturb_pose(&p, &n, 1), perturb_pose(&p, &n, 1));
    }

    #[test]
    fn range_noise_stays_on_ray() {
        let cloud = PointCloud::new(
            "s",
            vec![Point {
                x: 6.0,
                y: -8.0,
                z: 1.0,
                intensity: 0.2,
            }],
        );
        let noisy = apply_range_noise(&cloud, 0.5, 1);
        let (a, b) = (cloud.points[0], noisy.points[0]);
        let ra = (a.x * a.x + a.y * a.y + a.z * a.z).sqrt();
        let rb = (b.x * b.x + b.y * b.y + b.z * b.z).sqrt();
        for (u, v) in [(a.x, b.x), (a.y, b.y), (a.z, b.z)] {
            assert!((u / ra - v / rb).abs() < 1e-12);
        }
    }
}
