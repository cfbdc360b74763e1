//! Per-cell attention on three tiny maps: an observed ego cell, a cell only
//! a helper sees, and a cell nobody sees.

use std::collections::BTreeMap;

use v2vbench::perception::{
    attention_weights, attentive_fuse, AttentionParams, BevFeatureMap, GridConfig,
};

fn main() -> v2vbench::Result<()> {
    let grid = GridConfig {
        x_range: [0.0, 3.0],
        y_range: [0.0, 1.0],
        cell_size: 1.0,
    };
    // Cells are (x = 0.5, 1.5, 2.5); two channels each.
    let ego = BevFeatureMap::from_data(grid, 2, vec![1.0, 0.5, 0.0, 0.0, 0.0, 0.0])?;
    let helper = BevFeatureMap::from_data(grid, 2, vec![1.0, 0.9, 1.0, 1.2, 0.0, 0.0])?;
    let maps = BTreeMap::from([(0, ego), (1, helper)]);
    for mask in [false, true] {
        let mut params = AttentionParams::identity(2);
        params.mask_empty = mask;
        let fused = attentive_fuse(&maps, 0, &params)?;
        let weights = attention_weights(&maps, 0, &params)?;
        println!("mask_empty = {mask}");
        for (k, w) in weights.iter().enumerate() {
            println!(
                "  cell {k}: fused {:?}, weights {:?}",
                &fused.data[2 * k..2 * k + 2],
                w
            );
        }
    }
    Ok(())
}
