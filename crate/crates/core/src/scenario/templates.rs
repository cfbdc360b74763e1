//! Hand-built scenes with known visibility, used as oracles.

use std::f64::consts::FRAC_PI_2;

use super::{f32_exact, render_frames, RoadType, Scenario, ScenarioConfig, SensorConfig, Vehicle};
use crate::geom::OrientedBox;

/// Ids used by [`occluded_crossing`].
pub mod ids {
    pub const EGO: u32 = 0;
    pub const HELPER_CAV: u32 = 1;
    pub const CROSSING: u32 = 2;
    pub const PARKED_A: u32 = 3;
    pub const PARKED_B: u32 = 4;
    pub const FOLLOWER: u32 = 5;
    pub const ONCOMING: u32 = 6;
}

fn car(id: u32, x: f64, y: f64, yaw: f64) -> Vehicle {
    sized(id, x, y, yaw, [4.5, 2.0, 1.6])
}

fn sized(id: u32, x: f64, y: f64, yaw: f64, dims: [f64; 3]) -> Vehicle {
    Vehicle {
        id,
        bbox: OrientedBox {
            center: [f32_exact(x), f32_exact(y), f32_exact(dims[2] / 2.0)],
            length: dims[0],
            width: dims[1],
            height: dims[2],
            yaw: f32_exact(yaw),
        },
        velocity: [0.0, 0.0],
    }
}

/// T junction where a row of parked box trucks on the main road's north curb
/// hides a car waiting on the side road from the ego; a second CAV on the side
/// road has a clear view of it.
pub fn occluded_crossing(seed: u64, sensor: SensorConfig) -> Scenario {
    let truck = [10.0, 2.5, 3.2];
    let vehicles = vec![
        car(ids::EGO, -25.0, -1.75, 0.0),
        car(ids::HELPER_CAV, -1.75, 32.0, -FRAC_PI_2),
        car(ids::CROSSING, 1.75, 16.0, FRAC_PI_2),
        sized(ids::PARKED_A, -27.5, 4.8, 0.0, truck),
        sized(ids::PARKED_B, -17.0, 4.8, 0.0, truck),
        car(ids::FOLLOWER, -40.0, -1.75, 0.0),
        car(ids::ONCOMING, 20.0, 1.75, std::f64::consts::PI),
    ];
    let config = ScenarioConfig {
        road_type: RoadType::TIntersection,
        n_vehicles: vehicles.len() as u32,
        n_cavs: 2,
        duration_frames: 1,
        traffic_speed_kmh: 0.0,
        aggressiveness: 0.0,
        seed,
        sensor,
    };
    let cavs = [ids::EGO, ids::HELPER_CAV];
    let frames = render_frames(&config, &[vehicles], &cavs);
    Scenario {
        config,
        ego_id: ids::EGO,
        frames,
    }
}
