//! Rigid poses, yaw-only oriented boxes, convex clipping and rotated BEV IoU.

use std::f64::consts::PI;

use nalgebra::{Matrix3, Point2, Vector3};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sign tolerance for cross products during clipping.
pub const CLIP_EPS: f64 = 1e-12;

/// Slack applied to the closed-box containment test so points computed on a face
/// are not rejected by rounding.
pub const CONTAINMENT_EPS: f64 = 1e-9;

/// Wraps an angle into (-pi, pi].
pub fn normalize_angle(a: f64) -> f64 {
    let mut r = a % (2.0 * PI);
    if r <= -PI {
        r += 2.0 * PI;
    } else if r > PI {
        r -= 2.0 * PI;
    }
    r
}

/// SE(3) transform. The rotation is always the Z-Y-X Euler matrix of the stored angles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose {
    translation: Vector3<f64>,
    yaw: f64,
    pitch: f64,
    roll: f64,
    rotation: Matrix3<f64>,
}

impl Default for Pose {
    fn default() -> Self {
        Self::identity()
    }
}

impl Pose {
    pub fn new(translation: [f64; 3], yaw: f64, pitch: f64, roll: f64) -> Self {
        let (sy, cy) = yaw.sin_cos();
        let (sp, cp) = pitch.sin_cos();
        let (sr, cr) = roll.sin_cos();
        #[rustfmt::skip]
        let rotation = Matrix3::new(
            cy * cp, cy * sp * sr - sy * cr, cy * sp * cr + sy * sr,
            sy * cp, sy * sp * sr + cy * cr, sy * sp * cr - cy * sr,
            -sp,     cp * sr,                cp * cr,
        );
        Self {
            translation: Vector3::from(translation),
            yaw,
            pitch,
            roll,
            rotation,
        }
    }

    pub fn identity() -> Self {
        Self::new([0.0; 3], 0.0, 0.0, 0.0)
    }

    /// Planar pose: translation plus yaw.
    pub fn from_xy_yaw(x: f64, y: f64, z: f64, yaw: f64) -> Self {
        Self::new([x, y, z], yaw, 0.0, 0.0)
    }

    fn from_matrix(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Self {
        let pitch = (-rotation[(2, 0)]).clamp(-1.0, 1.0).asin();
        let yaw = rotation[(1, 0)].atan2(rotation[(0, 0)]);
        let roll = rotation[(2, 1)].atan2(rotation[(2, 2)]);
        Self::new(translation.into(), yaw, pitch, roll)
    }

    pub fn translation(&self) -> [f64; 3] {
        self.translation.into()
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn pitch(&self) -> f64 {
        self.pitch
    }

    pub fn roll(&self) -> f64 {
        self.roll
    }

    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }

    pub fn is_planar(&self) -> bool {
        self.pitch == 0.0 && self.roll == 0.0
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let rotation = self.rotation * other.rotation;
        let translation = self.rotation * other.translation + self.translation;
        Pose::from_matrix(&rotation, translation)
    }

    pub fn inverse(&self) -> Pose {
        let rt = self.rotation.transpose();
        Pose::from_matrix(&rt, -(rt * self.translation))
    }

    pub fn apply(&self, p: [f64; 3]) -> [f64; 3] {
        (self.rotation * Vector3::from(p) + self.translation).into()
    }

    pub fn rotate(&self, v: [f64; 3]) -> [f64; 3] {
        (self.rotation * Vector3::from(v)).into()
    }

    /// Expresses a yaw-only box given in this pose's source frame in its target frame.
    /// Only the yaw component of the rotation is carried onto the box.
    pub fn apply_box(&self, b: &OrientedBox) -> OrientedBox {
        let c = self.apply(b.center);
        OrientedBox {
            center: c,
            length: b.length,
            width: b.width,
            height: b.height,
            yaw: normalize_angle(b.yaw + self.yaw),
        }
    }
}

pub fn compose_pose(a: &Pose, b: &Pose) -> Pose {
    a.compose(b)
}

/// 3D box with yaw about world z.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OrientedBox {
    pub center: [f64; 3],
    pub length: f64,
    pub width: f64,
    pub height: f64,
    pub yaw: f64,
}

impl OrientedBox {
    pub fn new(center: [f64; 3], length: f64, width: f64, height: f64, yaw: f64) -> Result<Self> {
        let dims_ok = [length, width, height]
            .iter()
            .all(|d| d.is_finite() && *d > 0.0);
        if !dims_ok || !center.iter().all(|c| c.is_finite()) || !yaw.is_finite() {
            return Err(Error::InvalidInput(format!(
                "box dimensions must be positive and finite (l={length}, w={width}, h={height})"
            )));
        }
        Ok(Self {
            center,
            length,
            width,
            height,
            yaw: normalize_angle(yaw),
        })
    }

    pub fn bev_area(&self) -> f64 {
        self.length * self.width
    }

    /// Point expressed in the box's local frame (x along length).
    pub fn to_local(&self, p: [f64; 3]) -> [f64; 3] {
        let (s, c) = self.yaw.sin_cos();
        let dx = p[0] - self.center[0];
        let dy = p[1] - self.center[1];
        [c * dx + s * dy, -s * dx + c * dy, p[2] - self.center[2]]
    }

    pub fn contains(&self, p: [f64; 3]) -> bool {
        let l = self.to_local(p);
        l[0].abs() <= self.length / 2.0 + CONTAINMENT_EPS
            && l[1].abs() <= self.width / 2.0 + CONTAINMENT_EPS
            && l[2].abs() <= self.height / 2.0 + CONTAINMENT_EPS
    }

    pub fn corners_bev(&self) -> ConvexPolygon {
        let (s, c) = self.yaw.sin_cos();
        let hl = self.length / 2.0;
        let hw = self.width / 2.0;
        let vertices = [(hl, hw), (-hl, hw), (-hl, -hw), (hl, -hw)]
            .iter()
            .map(|&(lx, ly)| {
                Point2::new(
                    self.center[0] + c * lx - s * ly,
                    self.center[1] + s * lx + c * ly,
                )
            })
            .collect();
        ConvexPolygon { vertices }
    }
}

pub fn point_in_box(p: [f64; 3], b: &OrientedBox) -> bool {
    b.contains(p)
}

pub fn box_corners_bev(b: &OrientedBox) -> ConvexPolygon {
    b.corners_bev()
}

/// Counter-clockwise convex polygon in the x-y plane.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexPolygon {
    pub vertices: Vec<Point2<f64>>,
}

fn cross(o: &Point2<f64>, a: &Point2<f64>, b: &Point2<f64>) -> f64 {
    (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x)
}

impl ConvexPolygon {
    pub fn new(vertices: Vec<Point2<f64>>) -> Self {
        Self { vertices }
    }

    /// Shoelace area (signed positive for CCW).
    pub fn signed_area(&self) -> f64 {
        let n = self.vertices.len();
        if n < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..n {
            let a = &self.vertices[i];
            let b = &self.vertices[(i + 1) % n];
            acc += a.x * b.y - b.x * a.y;
        }
        acc / 2.0
    }

    pub fn area(&self) -> f64 {
        self.signed_area().max(0.0)
    }

    pub fn contains(&self, p: &Point2<f64>) -> bool {
        let n = self.vertices.len();
        n >= 3 && (0..n).all(|i| cross(&self.vertices[i], &self.vertices[(i + 1) % n], p) >= 0.0)
    }

    /// Sutherland-Hodgman: clips `self` against the convex `clip`.
    pub fn clip(&self, clip: &ConvexPolygon) -> ConvexPolygon {
        let mut output = self.vertices.clone();
        let m = clip.vertices.len();
        for i in 0..m {
            if output.is_empty() {
                break;
            }
            let a = clip.vertices[i];
            let b = clip.vertices[(i + 1) % m];
            let input = std::mem::take(&mut output);
            let n = input.len();
            for j in 0..n {
                let cur = input[j];
                let prev = input[(j + n - 1) % n];
                let cur_in = cross(&a, &b, &cur) >= -CLIP_EPS;
                let prev_in = cross(&a, &b, &prev) >= -CLIP_EPS;
                if cur_in {
                    if !prev_in {
                        if let Some(p) = line_intersection(&prev, &cur, &a, &b) {
                            output.push(p);
                        }
                    }
                    output.push(cur);
                } else if prev_in {
                    if let Some(p) = line_intersection(&prev, &cur, &a, &b) {
                        output.push(p);
                    }
                }
            }
        }
        ConvexPolygon { vertices: output }
    }
}

fn line_intersection(
    p1: &Point2<f64>,
    p2: &Point2<f64>,
    a: &Point2<f64>,
    b: &Point2<f64>,
) -> Option<Point2<f64>> {
    let d1 = cross(a, b, p1);
    let d2 = cross(a, b, p2);
    let denom = d1 - d2;
    if denom.abs() < CLIP_EPS {
        return None;
    }
    let t = d1 / denom;
    Some(Point2::new(
        p1.x + t * (p2.x - p1.x),
        p1.y + t * (p2.y - p1.y),
    ))
}

pub fn polygon_intersection_area(a: &ConvexPolygon, b: &ConvexPolygon) -> f64 {
    let area_a = a.area();
    let area_b = b.area();
    if area_a <= 0.0 || area_b <= 0.0 {
        return 0.0;
    }
    // Fixed clipping order keeps the result bit-symmetric in the arguments.
    let (subject, clip) = if polygon_order_key(a) <= polygon_order_key(b) {
        (a, b)
    } else {
        (b, a)
    };
    subject.clip(clip).area().min(area_a.min(area_b))
}

fn polygon_order_key(p: &ConvexPolygon) -> Vec<(u64, u64)> {
    p.vertices
        .iter()
        .map(|v| (v.x.to_bits(), v.y.to_bits()))
        .collect()
}

/// Rotated IoU of the two footprints on the x-y plane.
pub fn rotated_iou_bev(a: &OrientedBox, b: &OrientedBox) -> f64 {
    let dx = a.center[0] - b.center[0];
    let dy = a.center[1] - b.center[1];
    let reach = (a.length.hypot(a.width) + b.length.hypot(b.width)) / 2.0;
    if dx * dx + dy * dy > reach * reach {
        return 0.0;
    }
    let inter = polygon_intersection_area(&a.corners_bev(), &b.corners_bev());
    let union = a.bev_area() + b.bev_area() - inter;
    if union <= 0.0 {
        return 0.0;
    }
    (inter / union).clamp(0.0, 1.0)
}

/// One LiDAR return.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub intensity: f64,
}

impl Point {
    pub fn xyz(&self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

/// Points tagged with the coordinate frame they are expressed in.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PointCloud {
    pub frame_id: String,
    pub points: Vec<Point>,
}

impl PointCloud {
    pub fn new(frame_id: impl Into<String>, points: Vec<Point>) -> Self {
        Self {
            frame_id: frame_id.into(),
            points,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        for p in &self.points {
            if !(p.x.is_finite() && p.y.is_finite() && p.z.is_finite()) {
                return Err(Error::InvalidInput("non-finite point coordinate".into()));
            }
            if !(0.0..=1.0).contains(&p.intensity) {
                return Err(Error::InvalidInput(format!(
                    "intensity {} outside [0, 1]",
                    p.intensity
                )));
            }
        }
        Ok(())
    }

    /// Rounds every value to the nearest `f32`, the precision of the on-disk format.
    pub fn quantize_f32(&mut self) {
        for p in &mut self.points {
            p.x = p.x as f32 as f64;
            p.y = p.y as f32 as f64;
            p.z = p.z as f32 as f64;
            p.intensity = p.intensity as f32 as f64;
        }
    }
}

/// A pose labelled with the frames it maps between.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameTransform {
    pub target: String,
    pub source: String,
    pub target_from_source: Pose,
}

impl FrameTransform {
    pub fn new(target: impl Into<String>, source: impl Into<String>, pose: Pose) -> Self {
        Self {
            target: target.into(),
            source: source.into(),
            target_from_source: pose,
        }
    }

    pub fn inverse(&self) -> Self {
        Self {
            target: self.source.clone(),
            source: self.target.clone(),
            target_from_source: self.target_from_source.inverse(),
        }
    }
}

pub fn transform_points(transform: &FrameTransform, cloud: &PointCloud) -> Result<PointCloud> {
    if cloud.frame_id != transform.source {
        return Err(Error::FrameMismatch {
            cloud: cloud.frame_id.clone(),
            expected: transform.source.clone(),
        });
    }
    let pose = &transform.target_from_source;
    let points = cloud
        .points
        .iter()
        .map(|p| {
            let [x, y, z] = pose.apply(p.xyz());
            Point {
                x,
                y,
                z,
                intensity: p.intensity,
            }
        })
        .collect();
    Ok(PointCloud::new(transform.target.clone(), points))
}
