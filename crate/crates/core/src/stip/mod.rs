//! Space-time interest points: a Harris-style detector extended to time, and
//! descriptors made of gradient-orientation and optical-flow histograms.

mod describe;
mod detect;
mod flow;
mod volume;

pub use describe::{
    describe_stip, StipDescriber, StipDescriptorParams, FLOW_BINS, FLOW_BLOCK, GRADIENT_BINS,
    GRADIENT_BLOCK, STIP_DIM,
};
pub use detect::{detect_stips, detect_stips_in, harris_response, SpaceTimePoint, StipDetection, StipParams};
pub use flow::{lucas_kanade, FlowParams};
pub use volume::Volume;

use crate::media_io::{DescriptorSet, FrameSequence};

/// Detects and describes every interest point of `video`.
pub fn extract_stip_descriptors(
    video: &FrameSequence,
    detector: &StipParams,
    descriptor: &StipDescriptorParams,
) -> (Vec<SpaceTimePoint>, DescriptorSet) {
    let luma = Volume::luma(video);
    let det = detect_stips_in(&luma, detector);
    let mut set = DescriptorSet::new(STIP_DIM);
    if det.points.is_empty() {
        return (det.points, set);
    }
    let describer = StipDescriber::from_volume(&luma, descriptor);
    let mut kept = Vec::with_capacity(det.points.len());
    for p in det.points {
        // detected points lie inside the video, so their support is never empty
        if let Ok(d) = describer.describe(&p) {
            set.push(&d);
            kept.push(p);
        }
    }
    (kept, set)
}
