//! Road-type shares and CAV counts of 100k sampled scenario configs.

use std::collections::BTreeMap;

use v2vbench::rng::derive_seed;
use v2vbench::scenario::{sample_config, RoadType};

fn main() {
    let n = 100_000u64;
    let mut shares: BTreeMap<RoadType, u64> = BTreeMap::new();
    let mut cavs = 0u64;
    for k in 0..n {
        let c = sample_config(derive_seed(1, &[k]));
        *shares.entry(c.road_type).or_default() += 1;
        cavs += c.n_cavs as u64;
    }
    for rt in RoadType::ALL {
        let got = 100.0 * shares.get(&rt).copied().unwrap_or(0) as f64 / n as f64;
        println!(
            "{:<20} {:5.2}%  (table {:5.2}%)",
            rt.name(),
            got,
            rt.traffic().share_pct
        );
    }
    println!("mean CAVs {:.3}", cavs as f64 / n as f64);
}
