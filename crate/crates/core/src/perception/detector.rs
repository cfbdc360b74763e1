//! Deterministic BEV detector: threshold object cells, group them into
//! 8-connected blobs, fit a minimum-area rectangle to each blob and complete
//! it to a vehicle-sized box.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use serde::{Deserialize, Serialize};

use super::features::{channel, BevFeatureMap};
use super::nms::nms;
use crate::geom::{normalize_angle, OrientedBox};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Detection {
    pub bbox: OrientedBox,
    pub confidence: f64,
    pub source_cav: u32,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    /// Minimum (possibly attention-averaged) occupancy of an object cell.
    pub occupancy_threshold: f64,
    /// Ground height in the map frame.
    pub ground_z: f64,
    /// An object cell's max z must clear the ground by this much.
    pub min_height: f64,
    pub kappa: f64,
    /// Length, width and height a partially seen vehicle is completed to.
    pub prior_dims: [f64; 3],
    /// Blobs thinner than this are treated as a single visible face.
    pub face_thickness: f64,
    /// Blobs longer or wider than this many prior vehicles are split.
    pub split_factor: f64,
    pub nms_iou: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            occupancy_threshold: 0.05,
            ground_z: -1.9,
            min_height: 0.4,
            kappa: 5.0,
            prior_dims: [4.5, 2.0, 1.6],
            face_thickness: 1.0,
            split_factor: 1.5,
            nms_iou: 0.1,
        }
    }
}

/// Who produced the map and from where it was observed (map frame x-y).
#[derive(Debug, Clone, PartialEq)]
pub struct DetectContext {
    pub source_cav: u32,
    pub viewpoints: Vec<[f64; 2]>,
}

impl Default for DetectContext {
    fn default() -> Self {
        Self {
            source_cav: 0,
            viewpoints: vec![[0.0, 0.0]],
        }
    }
}

pub fn detect(map: &BevFeatureMap, config: &DetectorConfig) -> Vec<Detection> {
    detect_with(map, config, &DetectContext::default())
}

pub fn detect_with(
    map: &BevFeatureMap,
    config: &DetectorConfig,
    ctx: &DetectContext,
) -> Vec<Detection> {
    let mask = object_mask(map, config);
    let mut parts = Vec::new();
    for cells in components(&mask, map.rows, map.cols) {
        split_component(map, cells, config, 0, &mut parts);
    }
    let dets: Vec<Detection> = parts
        .iter()
        .map(|cells| fit_component(map, cells, config, ctx))
        .collect();
    nms(&dets, config.nms_iou)
}

fn object_mask(map: &BevFeatureMap, config: &DetectorConfig) -> Vec<bool> {
    (0..map.cells())
        .map(|k| {
            let cell = &map.data[k * map.channels..(k + 1) * map.channels];
            let occ = cell[channel::OCCUPANCY] as f64;
            // Attention mixes in empty neighbours, so heights are read per unit occupancy.
            occ > config.occupancy_threshold
                && cell[channel::MAX_Z] as f64 / occ > config.ground_z + config.min_height
        })
        .collect()
}

/// 8-connected components in row-major discovery order.
fn components(mask: &[bool], rows: usize, cols: usize) -> Vec<Vec<(usize, usize)>> {
    let mut seen = vec![false; mask.len()];
    let mut out = Vec::new();
    for start in 0..mask.len() {
        if !mask[start] || seen[start] {
            continue;
        }
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        let mut cells = Vec::new();
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k / cols, k % cols);
            cells.push((i, j));
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 || ni >= rows as i64 || nj >= cols as i64 {
                        continue;
                    }
                    let n = ni as usize * cols + nj as usize;
                    if mask[n] && !seen[n] {
                        seen[n] = true;
                        queue.push_back(n);
                    }
                }
            }
        }
        cells.sort_unstable();
        out.push(cells);
    }
    out
}

fn cross(o: [f64; 2], a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

/// Andrew's monotone chain; collinear points are dropped.
pub(crate) fn convex_hull(points: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let mut p = points.to_vec();
    p.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut hull: Vec<[f64; 2]> = Vec::with_capacity(2 * p.len());
    for pass in 0..2 {
        let start = hull.len();
        let iter: Box<dyn Iterator<Item = &[f64; 2]>> = if pass == 0 {
            Box::new(p.iter())
        } else {
            Box::new(p.iter().rev())
        };
        for q in iter {
            while hull.len() >= start + 2
                && cross(hull[hull.len() - 2], hull[hull.len() - 1], *q) <= 0.0
            {
                hull.pop();
            }
            hull.push(*q);
        }
        hull.pop();
    }
    hull
}

/// Rectangle in a rotated frame: axis angle and extents along u and v.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Rect {
    pub theta: f64,
    pub u: [f64; 2],
    pub v: [f64; 2],
}

impl Rect {
    /// Same rectangle described in the frame rotated by +pi/2.
    fn quarter_turn(self) -> Self {
        Self {
            theta: self.theta + FRAC_PI_2,
            u: self.v,
            v: [-self.u[1], -self.u[0]],
        }
    }

    fn area(&self) -> f64 {
        (self.u[1] - self.u[0]) * (self.v[1] - self.v[0])
    }
}

fn extents(points: &[[f64; 2]], theta: f64) -> Rect {
    let (s, c) = theta.sin_cos();
    let mut r = Rect {
        theta,
        u: [f64::INFINITY, f64::NEG_INFINITY],
        v: [f64::INFINITY, f64::NEG_INFINITY],
    };
    for p in points {
        let (pu, pv) = (c * p[0] + s * p[1], -s * p[0] + c * p[1]);
        r.u = [r.u[0].min(pu), r.u[1].max(pu)];
        r.v = [r.v[0].min(pv), r.v[1].max(pv)];
    }
    r
}

/// Minimum-area enclosing rectangle by rotating calipers over hull edges.
/// Angles are folded into (-pi/4, pi/4]; equal areas go to the smaller |angle|.
pub(crate) fn min_area_rect(points: &[[f64; 2]]) -> Rect {
    let hull = convex_hull(points);
    let mut angles = vec![0.0];
    for k in 0..hull.len() {
        let (a, b) = (hull[k], hull[(k + 1) % hull.len()]);
        if a != b {
            let mut t = (b[1] - a[1]).atan2(b[0] - a[0]);
            t = t.rem_euclid(FRAC_PI_2);
            if t > FRAC_PI_4 {
                t -= FRAC_PI_2;
            }
            angles.push(t);
        }
    }
    let mut best = extents(&hull, 0.0);
    for t in angles {
        let r = extents(&hull, t);
        let (ra, ba) = (r.area(), best.area());
        let tol = 1e-9 * ba.max(1.0);
        if ra < ba - tol || (ra <= ba + tol && t.abs() < best.theta.abs()) {
            best = r;
        }
    }
    best
}

/// Places an interval of length `target` over the observed `[lo, hi]`,
/// growing away from the viewer coordinate `view`.
fn complete(lo: f64, hi: f64, target: f64, view: f64) -> (f64, f64) {
    if hi - lo >= target {
        return (lo, hi);
    }
    if view <= (lo + hi) / 2.0 {
        (lo, lo + target)
    } else {
        (hi - target, hi)
    }
}

/// Blobs larger than `split_factor` vehicles along either axis are cut at the
/// sparsest slice across that axis, recursively. Touching vehicles in dense
/// traffic and blocky decoded maps otherwise fuse into one oversized box.
fn split_component(
    map: &BevFeatureMap,
    cells: Vec<(usize, usize)>,
    config: &DetectorConfig,
    depth: usize,
    out: &mut Vec<Vec<(usize, usize)>>,
) {
    const MAX_DEPTH: usize = 6;
    let centers: Vec<[f64; 2]> = cells
        .iter()
        .map(|&(i, j)| map.grid.cell_center(i, j))
        .collect();
    if depth >= MAX_DEPTH || cells.len() < 2 {
        out.push(cells);
        return;
    }
    let r = min_area_rect(&centers);
    let [prior_l, prior_w, _] = config.prior_dims;
    let (lu, lv) = (r.u[1] - r.u[0], r.v[1] - r.v[0]);
    let (long, short) = if lu >= lv { (lu, lv) } else { (lv, lu) };
    // Cut across whichever axis overflows; prefer the short one, where
    // side-by-side vehicles leave the narrower gaps.
    let along_u = if short > config.split_factor * prior_w {
        lu < lv
    } else if long > config.split_factor * prior_l {
        lu >= lv
    } else {
        out.push(cells);
        return;
    };
    let (s, c) = r.theta.sin_cos();
    let coord = |p: &[f64; 2]| {
        if along_u {
            c * p[0] + s * p[1]
        } else {
            -s * p[0] + c * p[1]
        }
    };
    let lo = if along_u { r.u[0] } else { r.v[0] };
    let step = map.grid.cell_size;
    let nbins = ((if along_u { lu } else { lv }) / step).floor() as usize + 1;
    let bin = |p: &[f64; 2]| (((coord(p) - lo) / step).round().max(0.0) as usize).min(nbins - 1);
    let mut hist = vec![0usize; nbins];
    for p in &centers {
        hist[bin(p)] += 1;
    }
    // Keep at least a third of a vehicle width on either side of the cut.
    let margin = ((prior_w / 3.0) / step).ceil() as usize;
    let mid = (nbins - 1) as f64 / 2.0;
    let cut = (margin..nbins.saturating_sub(margin)).min_by(|a, b| {
        hist[*a]
            .cmp(&hist[*b])
            .then(((*a as f64 - mid).abs()).total_cmp(&(*b as f64 - mid).abs()))
    });
    let Some(cut) = cut else {
        out.push(cells);
        return;
    };
    // Cells on the cut slice go to the side holding more of the slice's neighbours.
    let below = hist[..cut].iter().sum::<usize>();
    let above = hist[cut + 1..].iter().sum::<usize>();
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (cell, p) in cells.into_iter().zip(&centers) {
        let k = bin(p);
        if k < cut || (k == cut && below >= above) {
            a.push(cell);
        } else {
            b.push(cell);
        }
    }
    if a.is_empty() || b.is_empty() {
        out.push(if a.is_empty() { b } else { a });
        return;
    }
    split_component(map, a, config, depth + 1, out);
    split_component(map, b, config, depth + 1, out);
}

fn fit_component(
    map: &BevFeatureMap,
    cells: &[(usize, usize)],
    config: &DetectorConfig,
    ctx: &DetectContext,
) -> Detection {
    let centers: Vec<[f64; 2]> = cells
        .iter()
        .map(|&(i, j)| map.grid.cell_center(i, j))
        .collect();
    let mut mass = 0.0;
    let mut top = f64::NEG_INFINITY;
    for &(i, j) in cells {
        let cell = map.cell(i, j);
        mass += cell[channel::LOG_COUNT] as f64;
        top = top.max(cell[channel::MAX_Z] as f64 / cell[channel::OCCUPANCY] as f64);
    }
    let n = centers.len() as f64;
    let centroid = [
        centers.iter().map(|c| c[0]).sum::<f64>() / n,
        centers.iter().map(|c| c[1]).sum::<f64>() / n,
    ];
    let viewer = ctx
        .viewpoints
        .iter()
        .copied()
        .min_by(|a, b| {
            let da = (a[0] - centroid[0]).hypot(a[1] - centroid[1]);
            let db = (b[0] - centroid[0]).hypot(b[1] - centroid[1]);
            da.total_cmp(&db)
        })
        .unwrap_or([0.0, 0.0]);

    let mut r = min_area_rect(&centers);
    // Make u the long axis.
    if r.v[1] - r.v[0] > r.u[1] - r.u[0] {
        r = r.quarter_turn();
    }
    let [prior_l, prior_w, _] = config.prior_dims;
    let (lu, lv) = (r.u[1] - r.u[0], r.v[1] - r.v[0]);
    if lv < config.face_thickness && lu < (prior_l + prior_w) / 2.0 {
        // A single short face: the vehicle's end, so its length runs across it.
        r = r.quarter_turn();
    }
    let (s, c) = r.theta.sin_cos();
    let view = [
        c * viewer[0] + s * viewer[1],
        -s * viewer[0] + c * viewer[1],
    ];
    let (u0, u1) = complete(r.u[0], r.u[1], prior_l, view[0]);
    let (v0, v1) = complete(r.v[0], r.v[1], prior_w, view[1]);
    let (cu, cv) = ((u0 + u1) / 2.0, (v0 + v1) / 2.0);
    let height = (top - config.ground_z).max(0.1);
    let bbox = OrientedBox {
        center: [
            c * cu - s * cv,
            s * cu + c * cv,
            config.ground_z + height / 2.0,
        ],
        length: u1 - u0,
        width: v1 - v0,
        height,
        yaw: normalize_angle(r.theta),
    };
    Detection {
        bbox,
        confidence: 1.0 - (-mass / config.kappa).exp(),
        source_cav: ctx.source_cav,
    }
}
