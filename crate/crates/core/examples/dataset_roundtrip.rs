//! Write a small dataset to disk, read it back and compare.

use v2vbench::cli::RunConfig;
use v2vbench::scenario::{dataset_stats, generate_scenario_capped, read_dataset, write_dataset};

fn main() -> v2vbench::Result<()> {
    let cfg = RunConfig {
        scenarios: 3,
        seed: 5,
        ..RunConfig::default()
    };
    // Two rendered frames per scenario keeps the files small.
    let scenes = cfg
        .scenario_configs()
        .iter()
        .map(|c| generate_scenario_capped(c, Some(2)))
        .collect::<v2vbench::Result<Vec<_>>>()?;
    let dir = std::env::temp_dir().join("v2vbench_roundtrip");
    let manifest = write_dataset(&scenes, &dir)?;
    let back = read_dataset(&dir)?;
    println!(
        "{} scenarios in {}",
        manifest.scenarios.len(),
        dir.display()
    );
    println!("identical after reload: {}", back == scenes);
    print!("{}", dataset_stats(&back)?.to_table());
    Ok(())
}
