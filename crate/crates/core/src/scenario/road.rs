//! Parametric road skeletons: lanes as polylines with widths.

use std::f64::consts::PI;

use super::RoadType;

pub const LANE_WIDTH: f64 = 3.5;
pub const PARKING_WIDTH: f64 = 2.6;
/// Half extent of every template along its main axis.
pub const ROAD_REACH: f64 = 180.0;
/// Parking lanes stop this far from a crossing road's centerline.
const JUNCTION_CLEARANCE: f64 = 12.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LaneKind {
    Travel,
    Parking,
}

#[derive(Debug, Clone)]
pub struct Lane {
    pub centerline: Vec<[f64; 2]>,
    pub width: f64,
    pub kind: LaneKind,
    cumulative: Vec<f64>,
}

impl Lane {
    pub fn new(centerline: Vec<[f64; 2]>, width: f64, kind: LaneKind) -> Self {
        let mut cumulative = Vec::with_capacity(centerline.len());
        let mut acc = 0.0;
        cumulative.push(0.0);
        for w in centerline.windows(2) {
            acc += (w[1][0] - w[0][0]).hypot(w[1][1] - w[0][1]);
            cumulative.push(acc);
        }
        Self {
            centerline,
            width,
            kind,
            cumulative,
        }
    }

    fn straight(from: [f64; 2], to: [f64; 2], width: f64, kind: LaneKind) -> Self {
        Self::new(vec![from, to], width, kind)
    }

    pub fn length(&self) -> f64 {
        *self.cumulative.last().unwrap_or(&0.0)
    }

    /// Position and heading at arc length `s` (clamped to the lane).
    pub fn point_at(&self, s: f64) -> ([f64; 2], f64) {
        let s = s.clamp(0.0, self.length());
        let seg = match self.cumulative.iter().position(|&c| c >= s) {
            Some(0) | None => 0,
            Some(i) => i - 1,
        }
        .min(self.centerline.len() - 2);
        let (a, b) = (self.centerline[seg], self.centerline[seg + 1]);
        let seg_len = self.cumulative[seg + 1] - self.cumulative[seg];
        let t = if seg_len > 0.0 {
            (s - self.cumulative[seg]) / seg_len
        } else {
            0.0
        };
        let pos = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
        (pos, (b[1] - a[1]).atan2(b[0] - a[0]))
    }

    /// Distance from `p` to the centerline.
    pub fn lateral_distance(&self, p: [f64; 2]) -> f64 {
        self.centerline
            .windows(2)
            .map(|w| point_segment_distance(p, w[0], w[1]))
            .fold(f64::INFINITY, f64::min)
    }
}

fn point_segment_distance(p: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 {
        (((p[0] - a[0]) * dx + (p[1] - a[1]) * dy) / len2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    (p[0] - a[0] - t * dx).hypot(p[1] - a[1] - t * dy)
}

#[derive(Debug, Clone)]
pub struct RoadLayout {
    pub road_type: RoadType,
    pub lanes: Vec<Lane>,
}

impl RoadLayout {
    /// True when `p` lies inside some lane's corridor.
    pub fn is_drivable(&self, p: [f64; 2]) -> bool {
        self.lanes
            .iter()
            .any(|l| l.lateral_distance(p) <= l.width / 2.0 + 1e-6)
    }
}

/// Two-way road along +x through the origin; `per_dir` travel lanes each way.
fn x_road(lanes: &mut Vec<Lane>, per_dir: usize, parking: bool, parking_gaps: &[(f64, f64, bool)]) {
    let r = ROAD_REACH;
    for k in 0..per_dir {
        let off = LANE_WIDTH * (k as f64 + 0.5);
        lanes.push(Lane::straight(
            [-r, -off],
            [r, -off],
            LANE_WIDTH,
            LaneKind::Travel,
        ));
        lanes.push(Lane::straight(
            [r, off],
            [-r, off],
            LANE_WIDTH,
            LaneKind::Travel,
        ));
    }
    if parking {
        let off = LANE_WIDTH * per_dir as f64 + PARKING_WIDTH / 2.0;
        for (north, dir) in [(false, 1.0), (true, -1.0)] {
            let y = if north { off } else { -off };
            let mut cuts: Vec<(f64, f64)> = parking_gaps
                .iter()
                .filter(|g| g.2 == north)
                .map(|g| (g.0, g.1))
                .collect();
            cuts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let mut start = -r;
            for (lo, hi) in cuts.into_iter().chain(std::iter::once((r, r))) {
                if lo > start {
                    let (a, b) = if dir > 0.0 { (start, lo) } else { (lo, start) };
                    lanes.push(Lane::straight(
                        [a, y],
                        [b, y],
                        PARKING_WIDTH,
                        LaneKind::Parking,
                    ));
                }
                start = hi;
            }
        }
    }
}

fn rotate_lane(l: &Lane, angle: f64) -> Lane {
    let (s, c) = angle.sin_cos();
    Lane::new(
        l.centerline
            .iter()
            .map(|p| [c * p[0] - s * p[1], s * p[0] + c * p[1]])
            .collect(),
        l.width,
        l.kind,
    )
}

pub fn build_layout(road_type: RoadType) -> RoadLayout {
    let mut lanes = Vec::new();
    let clear = JUNCTION_CLEARANCE;
    match road_type {
        RoadType::Straight => x_road(&mut lanes, 2, true, &[]),
        RoadType::Midblock => x_road(&mut lanes, 1, true, &[]),
        RoadType::FourWay => {
            let gaps = [(-clear, clear, false), (-clear, clear, true)];
            x_road(&mut lanes, 1, true, &gaps);
            let mut cross = Vec::new();
            x_road(&mut cross, 1, true, &gaps);
            lanes.extend(cross.iter().map(|l| rotate_lane(l, PI / 2.0)));
        }
        RoadType::TIntersection => {
            x_road(&mut lanes, 1, true, &[(-clear, clear, true)]);
            // Side road leaves the main road towards +y.
            let start = LANE_WIDTH + PARKING_WIDTH;
            let r = ROAD_REACH;
            let half = LANE_WIDTH / 2.0;
            lanes.push(Lane::straight(
                [half, 0.0],
                [half, r],
                LANE_WIDTH,
                LaneKind::Travel,
            ));
            lanes.push(Lane::straight(
                [-half, r],
                [-half, 0.0],
                LANE_WIDTH,
                LaneKind::Travel,
            ));
            let px = LANE_WIDTH + PARKING_WIDTH / 2.0;
            let p0 = start + clear;
            lanes.push(Lane::straight(
                [px, p0],
                [px, r],
                PARKING_WIDTH,
                LaneKind::Parking,
            ));
            lanes.push(Lane::straight(
                [-px, r],
                [-px, p0],
                PARKING_WIDTH,
                LaneKind::Parking,
            ));
        }
        RoadType::Curvy => {
            // Constant-curvature arc through the origin, heading +x at the origin.
            let radius = 150.0;
            let sweep = ROAD_REACH / radius;
            let n = 72;
            for k in 0..2 {
                let off = LANE_WIDTH * (k as f64 + 0.5);
                for side in [-1.0, 1.0] {
                    let rr = radius - side * off;
                    let mut pts: Vec<[f64; 2]> = (0..=n)
                        .map(|i| {
                            let th = -sweep + 2.0 * sweep * i as f64 / n as f64;
                            [rr * th.sin(), radius - rr * th.cos()]
                        })
                        .collect();
                    if side > 0.0 {
                        pts.reverse();
                    }
                    lanes.push(Lane::new(pts, LANE_WIDTH, LaneKind::Travel));
                }
            }
        }
        RoadType::Ramp => {
            x_road(&mut lanes, 2, false, &[]);
            // Acceleration lane merging from the south-west.
            let y = -LANE_WIDTH * 2.5;
            lanes.push(Lane::new(
                vec![[-ROAD_REACH, y - 30.0], [-40.0, y], [ROAD_REACH, y]],
                LANE_WIDTH,
                LaneKind::Travel,
            ));
        }
    }
    RoadLayout { road_type, lanes }
}
