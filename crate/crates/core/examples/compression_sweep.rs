//! Intermediate fusion AP@0.7 against message size, with the other
//! strategies for reference.
//!
//!     cargo run --release --example compression_sweep -- 1,8,32,64,4096

use v2vbench::comm::{default_ladder, parse_ladder};
use v2vbench::eval::experiment::{ap_at, generate_all, occlusion_suite, sweep_compression};
use v2vbench::eval::EvalConfig;
use v2vbench::perception::{channel, PipelineConfig};

fn main() -> v2vbench::Result<()> {
    let c = channel::COUNT as u16;
    let ladder = match std::env::args().nth(1) {
        Some(spec) => parse_ladder(&spec, c)?,
        None => default_ladder(c),
    };
    let scenes = generate_all(&occlusion_suite(42, 6))?;
    let sweep = sweep_compression(
        &scenes,
        &ladder,
        &PipelineConfig::benchmark(),
        &EvalConfig::default(),
    )?;
    for r in &sweep.rows {
        println!(
            "{:<16} {:>7.0}x  AP@0.7 {:.3}  {:>9.0} B/msg  {:>8.3} ms/msg",
            r.codec,
            r.rate,
            ap_at(&r.aps, 0.7).unwrap_or(0.0),
            r.mean_message_bytes,
            r.mean_message_time_s * 1e3
        );
    }
    for r in &sweep.references {
        println!(
            "{:<16}           AP@0.7 {:.3}  {:>9.0} B/msg",
            r.strategy.name(),
            ap_at(&r.aps, 0.7).unwrap_or(0.0),
            r.mean_message_bytes
        );
    }
    Ok(())
}
