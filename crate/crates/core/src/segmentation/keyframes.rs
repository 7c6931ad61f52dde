//! Static video summary in the VSUMM style: sample about one frame per
//! second, cluster the samples' hue histograms and keep the sample nearest
//! each centroid.

use serde::{Deserialize, Serialize};

use crate::codebook::{kmeans, squared_distance};
use crate::features::{hue_histogram, l1_distance};
use crate::media_io::{DescriptorSet, FrameSequence};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct KeyframeParams {
    /// Sampling stride in frames; `None` uses the rounded frame rate.
    pub stride: Option<usize>,
    pub hue_bins: usize,
    pub max_iter: usize,
    /// Keyframes whose histograms lie closer than this (L1) to an earlier
    /// keyframe are dropped as duplicates.
    pub dedup_distance: f64,
    pub seed: u64,
}

impl Default for KeyframeParams {
    fn default() -> Self {
        KeyframeParams {
            stride: None,
            hue_bins: 16,
            max_iter: 100,
            dedup_distance: 0.4,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyframeSet {
    pub keyframe_indices: Vec<usize>,
    pub source_frame_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KeyframeStats {
    pub keyframe_count: usize,
    pub keyframe_ratio: f64,
}

impl KeyframeStats {
    pub fn to_vec(self) -> Vec<f64> {
        vec![self.keyframe_count as f64, self.keyframe_ratio]
    }
}

/// Sampled frame indices: the centre of every complete stride window.
pub fn sample_positions(frame_count: usize, stride: usize) -> Vec<usize> {
    let stride = stride.max(1);
    (0..frame_count / stride).map(|i| i * stride + stride / 2).collect()
}

/// 1 + the number of consecutive-sample distances at or above their mean
/// (ignoring zero distances).
pub fn estimate_cluster_count(hists: &[Vec<f64>]) -> usize {
    if hists.len() < 2 {
        return 1;
    }
    let d: Vec<f64> = hists.windows(2).map(|w| l1_distance(&w[0], &w[1])).collect();
    let mean = d.iter().sum::<f64>() / d.len() as f64;
    1 + d.iter().filter(|&&x| x > 1e-12 && x >= mean).count()
}

pub fn extract_keyframes(video: &FrameSequence, params: &KeyframeParams) -> KeyframeSet {
    let n = video.len();
    let stride = params
        .stride
        .unwrap_or_else(|| video.frame_rate().round().max(1.0) as usize);
    let positions = sample_positions(n, stride);
    let fallback = KeyframeSet {
        keyframe_indices: vec![0],
        source_frame_count: n,
    };
    if positions.is_empty() {
        return fallback;
    }
    let hists: Vec<Vec<f64>> = positions
        .iter()
        .map(|&i| hue_histogram(video.frame(i), params.hue_bins))
        .collect();
    let mut distinct: Vec<&Vec<f64>> = Vec::new();
    for h in &hists {
        if !distinct.contains(&h) {
            distinct.push(h);
        }
    }
    let k = estimate_cluster_count(&hists).min(distinct.len());

    let mut set = DescriptorSet::new(params.hue_bins);
    for h in &hists {
        set.push(h);
    }
    let mut rng = crate::seed::rng(params.seed);
    let Ok(result) = kmeans(&set, k, params.max_iter, &mut rng) else {
        return fallback;
    };
    let mut chosen = Vec::new();
    for j in 0..k {
        let c = &result.centroids[j * params.hue_bins..(j + 1) * params.hue_bins];
        let mut best: Option<(usize, f64)> = None;
        for (i, h) in hists.iter().enumerate() {
            if result.assignments[i] != j {
                continue;
            }
            let d = squared_distance(h, c);
            if best.is_none_or(|b| d < b.1) {
                best = Some((i, d));
            }
        }
        if let Some((i, _)) = best {
            chosen.push(i);
        }
    }
    chosen.sort_unstable();
    let mut kept: Vec<usize> = Vec::new();
    for i in chosen {
        if kept.iter().all(|&j| l1_distance(&hists[i], &hists[j]) >= params.dedup_distance) {
            kept.push(i);
        }
    }
    debug_assert!(!kept.is_empty());
    KeyframeSet {
        keyframe_indices: kept.into_iter().map(|i| positions[i]).collect(),
        source_frame_count: n,
    }
}

pub fn keyframe_statistics(ks: &KeyframeSet) -> KeyframeStats {
    KeyframeStats {
        keyframe_count: ks.keyframe_indices.len(),
        keyframe_ratio: ks.keyframe_indices.len() as f64 / ks.source_frame_count as f64,
    }
}
