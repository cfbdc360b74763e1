use std::collections::{BTreeMap, BTreeSet};

use rand::Rng;

use crate::error::{Error, Result};
use crate::geom::Pose;
use crate::rng;

/// Default V2V broadcast range (m).
pub const BROADCAST_RANGE_M: f64 = 70.0;

/// Who can talk to whom in one frame. Edges connect CAVs whose horizontal
/// distance is at most `range_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommGraph {
    pub nodes: BTreeMap<u32, Pose>,
    pub edges: BTreeSet<(u32, u32)>,
    pub range_m: f64,
}

pub fn horizontal_distance(a: &Pose, b: &Pose) -> f64 {
    let (ta, tb) = (a.translation(), b.translation());
    (ta[0] - tb[0]).hypot(ta[1] - tb[1])
}

pub fn build_comm_graph(poses: &BTreeMap<u32, Pose>, range_m: f64) -> CommGraph {
    let ids: Vec<u32> = poses.keys().copied().collect();
    let mut edges = BTreeSet::new();
    for (k, &a) in ids.iter().enumerate() {
        for &b in &ids[k + 1..] {
            if horizontal_distance(&poses[&a], &poses[&b]) <= range_m {
                edges.insert((a, b));
            }
        }
    }
    CommGraph {
        nodes: poses.clone(),
        edges,
        range_m,
    }
}

impl CommGraph {
    pub fn connected(&self, a: u32, b: u32) -> bool {
        self.edges.contains(&(a.min(b), a.max(b)))
    }

    /// Direct neighbours of `id`, ascending.
    pub fn neighbors(&self, id: u32) -> Vec<u32> {
        self.nodes
            .keys()
            .copied()
            .filter(|&o| o != id && self.connected(id, o))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EgoMode {
    Fixed(u32),
    Random(u64),
}

pub fn select_ego(graph: &CommGraph, mode: EgoMode) -> Result<u32> {
    match mode {
        EgoMode::Fixed(id) if graph.nodes.contains_key(&id) => Ok(id),
        EgoMode::Fixed(id) => Err(Error::UnknownCav(id)),
        EgoMode::Random(seed) => {
            let ids: Vec<u32> = graph.nodes.keys().copied().collect();
            if ids.is_empty() {
                return Err(Error::InvalidInput("empty communication graph".into()));
            }
            let mut r = rng::stream(seed, &[rng::tag::EGO]);
            Ok(ids[r.random_range(0..ids.len())])
        }
    }
}
