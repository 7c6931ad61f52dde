//! Per-channel linear classifiers and majority-vote fusion of their votes
//! over the elements of a video.

mod svm;

use std::collections::{BTreeMap, HashMap};
use std::fmt;

use rand::seq::{IteratorRandom, SliceRandom};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media_io::Label;

pub use svm::{svm_objective, train_linear_svm, ChannelModel, SvmParams};

/// Which part of a video a feature was computed on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ElementKind {
    MiddleFrame,
    Keyframe,
    Shot,
    WholeVideo,
}

impl ElementKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ElementKind::MiddleFrame => "middle-frame",
            ElementKind::Keyframe => "keyframe",
            ElementKind::Shot => "shot",
            ElementKind::WholeVideo => "whole-video",
        }
    }

    pub fn code(self) -> u8 {
        self as u8
    }

    pub fn from_code(code: u8) -> Option<ElementKind> {
        [
            ElementKind::MiddleFrame,
            ElementKind::Keyframe,
            ElementKind::Shot,
            ElementKind::WholeVideo,
        ]
        .get(code as usize)
        .copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ElementRef {
    pub kind: ElementKind,
    pub index: usize,
}

impl fmt::Display for ElementRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}#{}", self.kind.as_str(), self.index)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingExample {
    pub features: Vec<f64>,
    pub label: Label,
    pub video_id: String,
    pub element: ElementRef,
}

impl TrainingExample {
    pub(crate) fn describe(&self) -> String {
        format!("{}/{}", self.video_id, self.element)
    }
}

/// A feature of one element, ready to be put to its channel's model.
/// `empty` marks elements with no evidence (a BoVF of zero descriptors).
#[derive(Debug, Clone, PartialEq)]
pub struct ElementFeature {
    pub channel_id: String,
    pub element: ElementRef,
    pub values: Vec<f64>,
    pub empty: bool,
}

/// Subsamples the majority class to the minority count and shuffles.
pub fn balance_training_set(examples: Vec<TrainingExample>, seed: u64) -> Result<Vec<TrainingExample>> {
    let (pos, neg): (Vec<_>, Vec<_>) = examples.into_iter().partition(|e| e.label == Label::Positive);
    if pos.is_empty() || neg.is_empty() {
        return Err(Error::Validation(format!(
            "cannot balance: {} positive and {} negative examples",
            pos.len(),
            neg.len()
        )));
    }
    let mut rng = crate::seed::rng(seed);
    let m = pos.len().min(neg.len());
    let mut out: Vec<TrainingExample> = Vec::with_capacity(2 * m);
    for class in [pos, neg] {
        if class.len() == m {
            out.extend(class);
        } else {
            out.extend(class.into_iter().choose_multiple(&mut rng, m));
        }
    }
    out.shuffle(&mut rng);
    Ok(out)
}

/// `None` is an abstention; otherwise the vote and the margin `w . x + b`.
/// A zero margin votes negative.
pub fn predict(model: &ChannelModel, feature: &ElementFeature) -> Result<Option<(Label, f64)>> {
    if feature.empty {
        return Ok(None);
    }
    if feature.values.len() != model.dim() {
        return Err(Error::Contract(format!(
            "channel `{}`: feature of length {} for a model of dimension {}",
            model.channel_id,
            feature.values.len(),
            model.dim()
        )));
    }
    let m = model.margin(&feature.values);
    let vote = if m > 0.0 { Label::Positive } else { Label::Negative };
    Ok(Some((vote, m)))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CastVote {
    pub channel_id: String,
    pub element: ElementRef,
    pub vote: Label,
    pub margin: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VideoDecision {
    pub video_id: String,
    pub votes: Vec<CastVote>,
    pub positives: usize,
    pub negatives: usize,
    pub abstained: usize,
    pub label: Label,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FusionParams {
    /// Weight each vote by the inverse of its channel's vote count, so every
    /// channel carries the same total weight.
    pub normalize_per_channel: bool,
}

/// Strict majority, ties to negative.
pub fn majority(positives: usize, negatives: usize) -> Label {
    if positives > negatives {
        Label::Positive
    } else {
        Label::Negative
    }
}

/// Asks each channel model about every element feature and fuses the votes.
pub fn classify_video(
    video_id: &str,
    models: &[ChannelModel],
    features: &[ElementFeature],
    fusion: &FusionParams,
) -> Result<VideoDecision> {
    let by_channel: HashMap<&str, &ChannelModel> = models.iter().map(|m| (m.channel_id.as_str(), m)).collect();
    let mut votes = Vec::new();
    let mut abstained = 0;
    for f in features {
        let model = by_channel.get(f.channel_id.as_str()).ok_or_else(|| {
            Error::config(
                "channels",
                format!("no trained model for channel `{}`", f.channel_id),
            )
        })?;
        match predict(model, f)? {
            Some((vote, margin)) => votes.push(CastVote {
                channel_id: f.channel_id.clone(),
                element: f.element,
                vote,
                margin,
            }),
            None => abstained += 1,
        }
    }
    let positives = votes.iter().filter(|v| v.vote == Label::Positive).count();
    let negatives = votes.len() - positives;
    let label = if fusion.normalize_per_channel {
        let mut per_channel: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for v in &votes {
            let e = per_channel.entry(&v.channel_id).or_default();
            e.0 += f64::from(v.vote.sign());
            e.1 += 1.0;
        }
        let score: f64 = per_channel.values().map(|(s, n)| s / n).sum();
        if score > 1e-12 {
            Label::Positive
        } else {
            Label::Negative
        }
    } else {
        majority(positives, negatives)
    };
    Ok(VideoDecision {
        video_id: video_id.to_string(),
        votes,
        positives,
        negatives,
        abstained,
        label,
    })
}

#[cfg(test)]
mod tests;
