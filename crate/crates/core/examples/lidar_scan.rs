//! Ray-cast one CAV's sweep and count returns per vehicle by distance.

use v2vbench::eval::experiment::suite_sensor;
use v2vbench::scenario::{generate_scenario, RoadType, ScenarioConfig};

fn main() -> v2vbench::Result<()> {
    let config = ScenarioConfig {
        road_type: RoadType::FourWay,
        n_vehicles: 60,
        n_cavs: 2,
        duration_frames: 1,
        traffic_speed_kmh: 20.0,
        aggressiveness: 0.5,
        seed: 11,
        sensor: suite_sensor(),
    };
    let scene = generate_scenario(&config)?;
    let frame = &scene.frames[0];
    let pose = frame.true_poses[&scene.ego_id];
    let cloud = &frame.clouds[&scene.ego_id];
    let ground = cloud
        .points
        .iter()
        .filter(|p| pose.apply(p.xyz())[2] < 0.05)
        .count();
    println!("{} points, {} of them on the ground", cloud.len(), ground);
    let mut hits: Vec<(f64, usize)> = frame
        .vehicles
        .iter()
        .filter(|v| v.id != scene.ego_id)
        .map(|v| {
            let c = pose.inverse().apply(v.bbox.center);
            let n = cloud
                .points
                .iter()
                .filter(|p| v.bbox.contains(pose.apply(p.xyz())))
                .count();
            (c[0].hypot(c[1]), n)
        })
        .collect();
    hits.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (d, n) in hits.iter().take(12) {
        println!("{d:6.1} m  {n:5} points");
    }
    Ok(())
}
