//! Pillar features, attentive fusion, the box detector and the fusion pipelines.

pub mod attention;
pub mod detector;
pub mod features;
pub mod nms;
pub mod pipeline;

pub use attention::{attention_weights, attentive_fuse, softmax_stable, AttentionParams};
pub use detector::{detect, detect_with, DetectContext, Detection, DetectorConfig};
pub use features::{channel, extract_bev_features, BevFeatureMap, GridConfig};
pub use nms::nms;
pub use pipeline::{
    run_pipeline, run_pipeline_with, CommReport, PipelineConfig, PipelineOutput, Strategy,
};
