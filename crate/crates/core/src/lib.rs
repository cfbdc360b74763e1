//! Cooperative V2V perception benchmark: simulated LiDAR scenes, no/early/
//! late/intermediate fusion, a feature codec with a bandwidth model, and the
//! AP evaluation protocol.

pub mod cli;
pub mod comm;
pub mod error;
pub mod eval;
pub mod geom;
pub mod lidar;
pub mod perception;
pub mod plot;
pub mod rng;
pub mod scenario;

pub use error::{Error, Result};
