//! A car hidden from the ego behind parked trucks but seen by a second CAV.
//! Which strategies find it?

use v2vbench::geom::rotated_iou_bev;
use v2vbench::perception::{run_pipeline, PipelineConfig, Strategy};
use v2vbench::scenario::templates::{ids, occluded_crossing};
use v2vbench::scenario::SensorConfig;

fn main() -> v2vbench::Result<()> {
    let scene = occluded_crossing(3, SensorConfig::default());
    let frame = &scene.frames[0];
    let ego = frame.true_poses[&ids::EGO];
    // Ground truth in the ego frame.
    let target = ego
        .inverse()
        .apply_box(&frame.vehicle(ids::CROSSING).expect("in scene").bbox);
    println!(
        "hidden car at ({:.1}, {:.1}) in the ego frame",
        target.center[0], target.center[1]
    );
    let config = PipelineConfig::benchmark();
    for strategy in Strategy::ALL {
        let out = run_pipeline(frame, ids::EGO, strategy, &config)?;
        let best = out
            .detections
            .iter()
            .map(|d| rotated_iou_bev(&d.bbox, &target))
            .fold(0.0, f64::max);
        println!(
            "{:<13} {:>2} detections, best IoU with hidden car {:.2}, {:>8} bytes sent",
            strategy.name(),
            out.detections.len(),
            best,
            out.report.total_bytes
        );
    }
    Ok(())
}
