//! Rotated box IoU in the ground plane, checked against a raster estimate.

use std::f64::consts::FRAC_PI_4;

use v2vbench::geom::{rotated_iou_bev, OrientedBox, Pose};

fn raster_iou(a: &OrientedBox, b: &OrientedBox, step: f64) -> f64 {
    let (mut both, mut either) = (0u64, 0u64);
    let mut x = -10.0;
    while x < 10.0 {
        let mut y = -10.0;
        while y < 10.0 {
            let p = [x + step / 2.0, y + step / 2.0, 0.0];
            let (ia, ib) = (
                a.contains([p[0], p[1], a.center[2]]),
                b.contains([p[0], p[1], b.center[2]]),
            );
            both += (ia && ib) as u64;
            either += (ia || ib) as u64;
            y += step;
        }
        x += step;
    }
    both as f64 / either.max(1) as f64
}

fn main() -> v2vbench::Result<()> {
    let car = OrientedBox::new([0.0, 0.0, 0.8], 4.5, 2.0, 1.6, 0.0)?;
    for (dx, yaw) in [
        (0.0, 0.0),
        (0.5, 0.0),
        (0.0, FRAC_PI_4),
        (1.0, 0.3),
        (4.0, 1.2),
    ] {
        let other = Pose::from_xy_yaw(dx, 0.2, 0.0, yaw).apply_box(&car);
        println!(
            "shift {dx:.1} m, yaw {yaw:.2} rad: exact {:.4}, raster {:.4}",
            rotated_iou_bev(&car, &other),
            raster_iou(&car, &other, 0.02)
        );
    }
    Ok(())
}
