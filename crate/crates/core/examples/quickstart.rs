//! Generate a few occlusion-heavy scenes and score all four strategies.
//!
//!     cargo run --release --example quickstart

use v2vbench::eval::experiment::{evaluate, generate_all, occlusion_suite};
use v2vbench::eval::report::RunSummary;
use v2vbench::eval::EvalConfig;
use v2vbench::perception::{PipelineConfig, Strategy};

fn main() -> v2vbench::Result<()> {
    let scenes = generate_all(&occlusion_suite(42, 4))?;
    let ev = evaluate(
        &scenes,
        &Strategy::ALL,
        &PipelineConfig::benchmark(),
        &EvalConfig::default(),
    )?;
    print!("{}", RunSummary::of(&ev).to_table());
    Ok(())
}
