//! Per-video feature extraction for every configured channel.
//!
//! Dense channels (histograms, Zernike moments, keyframe statistics) are
//! stored as final vectors. BoVF channels keep their raw local descriptors,
//! since the codebook (and the PCA projection of PCA-SIFT) is learned later
//! from the training split only.

use rayon::prelude::*;

use super::config::{ChannelSpec, FeatureKind, PipelineConfig};
use crate::classify::{ElementKind, ElementRef};
use crate::error::{Error, Result};
use crate::features::{
    extract_huesift, extract_sift, hue_histogram, rgb_histogram, zernike_moments, RgbBins,
};
use crate::media_io::artifact::{tag, Artifact, PayloadReader, PayloadWriter};
use crate::media_io::{decode_video, DescriptorSet, Frame, FrameSequence, ManifestEntry};
use crate::segmentation::{
    detect_shots, extract_keyframes, keyframe_statistics, middle_frame, KeyframeSet, Shot,
};
use crate::stip::extract_stip_descriptors;

#[derive(Debug, Clone, PartialEq)]
pub enum ElementData {
    Dense(Vec<f64>),
    /// Raw local descriptors; for PCA-SIFT these are unprojected SIFT rows.
    Descriptors(DescriptorSet),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelElement {
    pub element: ElementRef,
    pub data: ElementData,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChannelFeatures {
    pub channel_id: String,
    pub elements: Vec<ChannelElement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VideoFeatures {
    pub video_id: String,
    pub frame_count: usize,
    pub shots: Vec<Shot>,
    pub channels: Vec<ChannelFeatures>,
}

impl VideoFeatures {
    pub fn channel(&self, id: &str) -> Option<&ChannelFeatures> {
        self.channels.iter().find(|c| c.channel_id == id)
    }
}

/// Segmentation computed at most once per video and shared by channels.
struct Segments<'a> {
    video: &'a FrameSequence,
    cfg: &'a PipelineConfig,
    shots: Vec<Shot>,
    keyframes: Option<KeyframeSet>,
}

impl<'a> Segments<'a> {
    fn new(video: &'a FrameSequence, cfg: &'a PipelineConfig) -> Result<Self> {
        let s = &cfg.segmentation;
        let shots = detect_shots(video, s.cut_threshold, s.min_shot_len)?;
        Ok(Segments {
            video,
            cfg,
            shots,
            keyframes: None,
        })
    }

    fn keyframes(&mut self) -> &KeyframeSet {
        let (video, params) = (self.video, &self.cfg.segmentation.keyframes);
        self.keyframes.get_or_insert_with(|| extract_keyframes(video, params))
    }

    /// Frame indices of the middle-frame or keyframe elements.
    fn frames(&mut self, kind: ElementKind) -> Vec<usize> {
        match kind {
            ElementKind::MiddleFrame => self.shots.iter().map(|&s| middle_frame(s)).collect(),
            ElementKind::Keyframe => self.keyframes().keyframe_indices.clone(),
            _ => unreachable!("validated granularity"),
        }
    }
}

fn frame_feature(spec: &ChannelSpec, cfg: &PipelineConfig, frame: &Frame) -> ElementData {
    let descriptors = |pairs: Vec<(crate::features::Keypoint, Vec<f64>)>, dim: usize| {
        let mut set = DescriptorSet::new(dim);
        for (_, d) in &pairs {
            set.push(d);
        }
        ElementData::Descriptors(set)
    };
    let bins = spec.bins.unwrap_or(0);
    match spec.kind {
        FeatureKind::RgbHistogram => {
            ElementData::Dense(rgb_histogram(frame, RgbBins::for_cells(bins).expect("validated bins")))
        }
        FeatureKind::HueHistogram => ElementData::Dense(hue_histogram(frame, bins)),
        FeatureKind::Zernike => ElementData::Dense(zernike_moments(frame)),
        FeatureKind::SiftBovf | FeatureKind::PcasiftBovf => {
            descriptors(extract_sift(frame, &cfg.features.sift), crate::features::SIFT_DIM)
        }
        FeatureKind::HuesiftBovf => {
            descriptors(extract_huesift(frame, &cfg.features.sift), crate::features::HUESIFT_DIM)
        }
        FeatureKind::StipBovf | FeatureKind::KeyframeStats => unreachable!("validated granularity"),
    }
}

fn stip_of(video: &FrameSequence, cfg: &PipelineConfig) -> ElementData {
    ElementData::Descriptors(extract_stip_descriptors(video, &cfg.features.stip, &cfg.features.stip_descriptor).1)
}

/// Extracts every configured channel from one decoded video.
pub fn extract_video(video: &FrameSequence, cfg: &PipelineConfig) -> Result<VideoFeatures> {
    if video.is_empty() {
        return Err(Error::Validation(format!("video `{}` has no frames", video.video_id())));
    }
    let mut seg = Segments::new(video, cfg)?;
    let mut channels = Vec::with_capacity(cfg.channels.len());
    for spec in &cfg.channels {
        let g = spec.granularity;
        let elements: Vec<(usize, ElementData)> = match (spec.kind, g) {
            (FeatureKind::KeyframeStats, _) => {
                vec![(0, ElementData::Dense(keyframe_statistics(seg.keyframes()).to_vec()))]
            }
            (FeatureKind::StipBovf, ElementKind::Shot) => seg
                .shots
                .iter()
                .enumerate()
                .map(|(i, s)| (i, stip_of(&video.slice(s.start_frame, s.end_frame), cfg)))
                .collect(),
            (FeatureKind::StipBovf, _) => vec![(0, stip_of(video, cfg))],
            _ => seg
                .frames(g)
                .into_iter()
                .enumerate()
                .map(|(i, f)| (i, frame_feature(spec, cfg, video.frame(f))))
                .collect(),
        };
        channels.push(ChannelFeatures {
            channel_id: spec.id.clone(),
            elements: elements
                .into_iter()
                .map(|(index, data)| ChannelElement {
                    element: ElementRef { kind: g, index },
                    data,
                })
                .collect(),
        });
    }
    Ok(VideoFeatures {
        video_id: video.video_id().to_string(),
        frame_count: video.len(),
        shots: seg.shots,
        channels,
    })
}

/// Decodes the video of a manifest entry under the entry's id.
pub fn load_entry(entry: &ManifestEntry) -> Result<FrameSequence> {
    Ok(decode_video(&entry.path)?.with_video_id(&entry.video_id))
}

/// Builds a worker pool of `jobs` threads (default: available parallelism).
pub fn worker_pool(jobs: Option<usize>) -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Some(n) = jobs {
        b = b.num_threads(n);
    }
    b.build().map_err(|e| Error::Invariant(format!("cannot start worker pool: {e}")))
}

/// Loads and extracts `items` in parallel; results keep the input order.
pub fn extract_many<T, F>(items: &[T], cfg: &PipelineConfig, load: F) -> Result<Vec<VideoFeatures>>
where
    T: Sync,
    F: Fn(&T) -> Result<FrameSequence> + Sync,
{
    let pool = worker_pool(cfg.jobs)?;
    pool.install(|| {
        items
            .par_iter()
            .map(|item| {
                let video = load(item)?;
                let feats = extract_video(&video, cfg)?;
                log::debug!("extracted {} ({} frames)", feats.video_id, feats.frame_count);
                Ok(feats)
            })
            .collect()
    })
}

/// Payload: video id, frame count, shot count and (start, end) pairs,
/// channel count, then per channel its id and element count, and per element
/// the kind code (u8), index, data code (u8: 0 dense, 1 descriptors) and
/// either a length-prefixed real vector or a descriptor matrix (count, dim,
/// rows).
impl Artifact for VideoFeatures {
    const TAG: u32 = tag::VIDEO_FEATURES;
    const NAME: &'static str = "video features";

    fn encode(&self, w: &mut PayloadWriter) {
        w.str(&self.video_id);
        w.dim(self.frame_count);
        w.dim(self.shots.len());
        for s in &self.shots {
            w.dim(s.start_frame);
            w.dim(s.end_frame);
        }
        w.dim(self.channels.len());
        for c in &self.channels {
            w.str(&c.channel_id);
            w.dim(c.elements.len());
            for e in &c.elements {
                w.u8(e.element.kind.code());
                w.dim(e.element.index);
                match &e.data {
                    ElementData::Dense(v) => {
                        w.u8(0);
                        w.dim(v.len());
                        w.f64s(v);
                    }
                    ElementData::Descriptors(set) => {
                        w.u8(1);
                        w.dim(set.len());
                        w.dim(set.dim());
                        w.f64s(set.as_flat());
                    }
                }
            }
        }
    }

    fn decode(r: &mut PayloadReader<'_>) -> Result<Self> {
        let video_id = r.str()?;
        let frame_count = r.dim()?;
        let n_shots = r.dim()?;
        let mut shots = Vec::new();
        for _ in 0..n_shots {
            let (s, e) = (r.dim()?, r.dim()?);
            if s > e || e >= frame_count {
                return Err(Error::Corruption(format!("shot {s}..={e} outside {frame_count} frames")));
            }
            shots.push(Shot::new(s, e));
        }
        let n_channels = r.dim()?;
        let mut channels = Vec::new();
        for _ in 0..n_channels {
            let channel_id = r.str()?;
            let n = r.dim()?;
            let mut elements = Vec::new();
            for _ in 0..n {
                let code = r.u8()?;
                let kind = ElementKind::from_code(code)
                    .ok_or_else(|| Error::Corruption(format!("unknown element kind code {code}")))?;
                let index = r.dim()?;
                let data = match r.u8()? {
                    0 => {
                        let len = r.dim()?;
                        ElementData::Dense(r.f64s(len)?)
                    }
                    1 => {
                        let count = r.dim()?;
                        let dim = r.dim()?;
                        let total = count
                            .checked_mul(dim)
                            .ok_or_else(|| Error::Corruption("descriptor matrix size overflows".into()))?;
                        let rows = r.f64s(total)?;
                        if dim == 0 {
                            return Err(Error::Corruption("descriptor dimension 0".into()));
                        }
                        ElementData::Descriptors(DescriptorSet::from_rows(dim, rows)?)
                    }
                    other => return Err(Error::Corruption(format!("unknown element data code {other}"))),
                };
                elements.push(ChannelElement {
                    element: ElementRef { kind, index },
                    data,
                });
            }
            channels.push(ChannelFeatures { channel_id, elements });
        }
        Ok(VideoFeatures {
            video_id,
            frame_count,
            shots,
            channels,
        })
    }
}
