//! AP@0.7 as nested CAV groups grow around the ego in busy junctions.
//!
//!     cargo run --release --example cav_sweep [scenes]

use v2vbench::eval::experiment::{ap_at, cav_sweep_suite, generate_all, sweep_cav_count};
use v2vbench::eval::EvalConfig;
use v2vbench::perception::{PipelineConfig, Strategy};

fn main() -> v2vbench::Result<()> {
    let n = std::env::args()
        .nth(1)
        .and_then(|a| a.parse().ok())
        .unwrap_or(6);
    let scenes = generate_all(&cav_sweep_suite(42, n))?;
    let strategies = [Strategy::Early, Strategy::Late, Strategy::Intermediate];
    let counts: Vec<usize> = (2..=7).collect();
    let rows = sweep_cav_count(
        &scenes,
        &counts,
        &strategies,
        &PipelineConfig::benchmark(),
        &EvalConfig::default(),
    )?;
    print!("cavs");
    for s in strategies {
        print!(" {:>13}", s.name());
    }
    println!();
    for k in counts {
        print!("{k:>4}");
        for s in strategies {
            let r = rows
                .iter()
                .find(|r| r.n_cavs == k && r.strategy == s)
                .expect("every cell is computed");
            print!(" {:>13.3}", ap_at(&r.aps, 0.7).unwrap_or(0.0));
        }
        println!();
    }
    Ok(())
}
