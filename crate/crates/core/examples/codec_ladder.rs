//! Encode one helper's feature map along the default ladder: rate, wire size,
//! air time at 27 Mbps and reconstruction error.

use v2vbench::comm::{
    compression_rate, decode_features, default_ladder, encode_features, transmit_time, LinkModel,
};
use v2vbench::eval::experiment::{generate_all, occlusion_suite};
use v2vbench::perception::{channel, extract_bev_features, PipelineConfig};
use v2vbench::scenario::sensor_frame_id;

fn main() -> v2vbench::Result<()> {
    let scene = generate_all(&occlusion_suite(42, 1))?.remove(0);
    let frame = &scene.frames[0];
    let cav = scene.ego_id;
    let grid = PipelineConfig::benchmark().grid;
    let map = extract_bev_features(&frame.clouds[&cav], &grid, &sensor_frame_id(cav))?;
    println!(
        "{}x{}x{} map, {} bytes dense",
        map.rows,
        map.cols,
        map.channels,
        map.byte_size()
    );
    let link = LinkModel::default();
    for codec in default_ladder(channel::COUNT as u16) {
        let blob = encode_features(&map, &codec)?;
        let back = decode_features(&blob)?;
        let err = map
            .data
            .iter()
            .zip(&back.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f32, f32::max);
        println!(
            "{:<16} rate {:>7.1}  wire {:>8} B  {:>8.3} ms  max err {:.3}",
            codec.label(),
            compression_rate(&map, &blob),
            blob.wire_bytes(),
            transmit_time(blob.wire_bytes() as u64, &link) * 1e3,
            err
        );
    }
    Ok(())
}
