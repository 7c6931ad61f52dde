//! Shot boundaries, middle frames and keyframe summaries.

mod keyframes;
mod shots;

pub use keyframes::{
    estimate_cluster_count, extract_keyframes, keyframe_statistics, sample_positions,
    KeyframeParams, KeyframeSet, KeyframeStats,
};
pub use shots::{detect_shots, middle_frame, Shot, DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN};
