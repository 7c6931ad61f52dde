use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{l1_distance, rgb_histogram, RgbBins};
use crate::media_io::FrameSequence;

pub const DEFAULT_CUT_THRESHOLD: f64 = 0.5;
pub const DEFAULT_MIN_SHOT_LEN: usize = 10;

/// Inclusive frame range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shot {
    pub start_frame: usize,
    pub end_frame: usize,
}

impl Shot {
    pub fn new(start_frame: usize, end_frame: usize) -> Shot {
        assert!(start_frame <= end_frame, "shot start after end");
        Shot {
            start_frame,
            end_frame,
        }
    }

    pub fn len(&self) -> usize {
        self.end_frame - self.start_frame + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

pub fn middle_frame(shot: Shot) -> usize {
    (shot.start_frame + shot.end_frame) / 2
}

/// Splits `video` at abrupt cuts: a cut falls between frames t and t+1 when
/// the L1 distance of their 64-bin RGB histograms exceeds `threshold`, unless
/// the shot it would close is shorter than `min_shot_len`.
pub fn detect_shots(video: &FrameSequence, threshold: f64, min_shot_len: usize) -> Result<Vec<Shot>> {
    if !(threshold > 0.0 && threshold <= 2.0) {
        return Err(Error::Contract(format!("cut threshold {threshold} outside (0, 2]")));
    }
    if min_shot_len == 0 {
        return Err(Error::Contract("min_shot_len must be at least 1".into()));
    }
    let hists: Vec<Vec<f64>> = video
        .frames()
        .iter()
        .map(|f| rgb_histogram(f, RgbBins::BINS_64))
        .collect();
    let mut shots = Vec::new();
    let mut start = 0;
    for t in 0..hists.len().saturating_sub(1) {
        let next = t + 1;
        if next - start >= min_shot_len && l1_distance(&hists[t], &hists[next]) > threshold {
            shots.push(Shot::new(start, t));
            start = next;
        }
    }
    shots.push(Shot::new(start, video.len() - 1));
    Ok(shots)
}
