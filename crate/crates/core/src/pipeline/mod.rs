//! End-to-end pipeline: configuration, feature extraction, training,
//! cross-validation and the synthetic corpus.

pub mod config;
pub mod crossval;
pub mod extract;
pub mod synth;
pub mod train;

pub use config::{ChannelSpec, Configuration, FeatureKind, PipelineConfig};
pub use crossval::{cross_validate, CrossValidation};
pub use extract::{extract_many, extract_video, VideoFeatures};
pub use train::{train_pipeline, Scope, TrainedPipeline};
