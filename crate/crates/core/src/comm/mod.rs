//! V2V connectivity, the feature codec and the link timing model.

pub mod codec;
pub mod graph;
pub mod link;

pub use codec::{
    compression_rate, decode_features, default_ladder, encode_features, parse_ladder, Codec,
    CodecDescriptor, CompressedBlob,
};
pub use graph::{build_comm_graph, select_ego, CommGraph, EgoMode, BROADCAST_RANGE_M};
pub use link::{transmit_time, LinkModel};
