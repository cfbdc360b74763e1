use serde::{Deserialize, Serialize};

/// Broadcast link: fixed throughput plus per-message protocol overhead.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkModel {
    pub throughput_mbps: f64,
    pub overhead_bytes: u64,
}

impl Default for LinkModel {
    fn default() -> Self {
        Self {
            throughput_mbps: 27.0,
            overhead_bytes: 0,
        }
    }
}

/// Seconds needed to push `bytes` through `link`.
pub fn transmit_time(bytes: u64, link: &LinkModel) -> f64 {
    (bytes + link.overhead_bytes) as f64 * 8.0 / (link.throughput_mbps * 1e6)
}
