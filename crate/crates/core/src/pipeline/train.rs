//! Training of per-channel vocabularies and classifiers from extracted
//! features, and classification of a video with the trained channels.

use std::collections::HashSet;

use rayon::prelude::*;

use super::config::{ChannelSpec, FeatureKind, PipelineConfig};
use super::extract::{worker_pool, ChannelFeatures, ElementData, VideoFeatures};
use crate::classify::{
    balance_training_set, classify_video, train_linear_svm, ChannelModel, ElementFeature, FusionParams,
    TrainingExample, VideoDecision,
};
use crate::codebook::{encode_bovf, sample_descriptors, train_codebook, Codebook};
use crate::error::{Error, Result};
use crate::features::{project_pca_sift, PcaProjection, PCA_SIFT_DIM};
use crate::media_io::artifact::to_bytes;
use crate::media_io::{DescriptorSet, Label};

/// What a training run covers; selects the derived seed streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    Fold(usize),
    Full,
}

impl Scope {
    fn index(self) -> u64 {
        match self {
            Scope::Fold(f) => f as u64,
            Scope::Full => u64::MAX,
        }
    }
}

fn channel_seed(cfg: &PipelineConfig, purpose: &str, channel: &str, scope: Scope) -> u64 {
    crate::seed::derive(cfg.seed, &format!("{purpose}/{channel}"), scope.index())
}

/// Codebook of a BoVF channel, preceded by a PCA projection for PCA-SIFT.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelVocabulary {
    pub channel_id: String,
    pub pca: Option<PcaProjection>,
    pub codebook: Codebook,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedChannel {
    pub spec: ChannelSpec,
    pub vocabulary: Option<ChannelVocabulary>,
    pub model: ChannelModel,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedPipeline {
    pub channels: Vec<TrainedChannel>,
    pub fusion: FusionParams,
}

pub(crate) fn channel_of<'a>(video: &'a VideoFeatures, id: &str) -> Result<&'a ChannelFeatures> {
    video.channel(id).ok_or_else(|| Error::MissingArtifact {
        what: format!("features of channel `{id}` for video `{}`", video.video_id),
        producer: "extract",
    })
}

fn distinct_rows(set: &DescriptorSet, limit: usize) -> usize {
    let mut seen = HashSet::new();
    for row in set.rows() {
        seen.insert(row.iter().map(|v| v.to_bits()).collect::<Vec<u64>>());
        if seen.len() >= limit {
            break;
        }
    }
    seen.len()
}

/// Learns the vocabulary of one BoVF channel from the training videos.
pub fn build_vocabulary(
    cfg: &PipelineConfig,
    spec: &ChannelSpec,
    train: &[&VideoFeatures],
    scope: Scope,
) -> Result<ChannelVocabulary> {
    let k = spec.bins.expect("validated BoVF channel");
    let mut sets = Vec::new();
    for v in train {
        for e in &channel_of(v, &spec.id)?.elements {
            if let ElementData::Descriptors(d) = &e.data {
                sets.push(d);
            }
        }
    }
    let dim = sets.first().map(|d| d.dim()).ok_or_else(|| {
        Error::Validation(format!("channel `{}` has no elements in the training split", spec.id))
    })?;
    let budget = k.saturating_mul(cfg.training.codebook_budget_per_word);
    let mut sample = sample_descriptors(
        &spec.id,
        dim,
        sets.iter().copied(),
        budget,
        channel_seed(cfg, "sample", &spec.id, scope),
    )?;
    let pca = if spec.kind == FeatureKind::PcasiftBovf {
        let p = project_pca_sift(&sample, PCA_SIFT_DIM).map_err(|e| match e {
            Error::Contract(m) => Error::Validation(format!("channel `{}`: {m}", spec.id)),
            other => other,
        })?;
        sample = p.apply_set(&sample);
        Some(p)
    } else {
        None
    };
    let distinct = distinct_rows(&sample, k);
    let k_used = if distinct < k {
        log::warn!(
            "channel `{}`: only {distinct} distinct training descriptors, codebook reduced from {k} words",
            spec.id
        );
        distinct
    } else {
        k
    };
    if k_used < 2 {
        return Err(Error::Validation(format!(
            "channel `{}`: {distinct} distinct training descriptors cannot form a codebook",
            spec.id
        )));
    }
    let codebook = train_codebook(
        &spec.id,
        &sample,
        k_used,
        cfg.training.codebook_max_iter,
        channel_seed(cfg, "kmeans", &spec.id, scope),
    )?;
    Ok(ChannelVocabulary {
        channel_id: spec.id.clone(),
        pca,
        codebook,
    })
}

/// Turns raw channel features into model inputs.
pub fn element_features(
    spec: &ChannelSpec,
    vocabulary: Option<&ChannelVocabulary>,
    features: &ChannelFeatures,
) -> Result<Vec<ElementFeature>> {
    features
        .elements
        .iter()
        .map(|e| {
            let (values, empty) = match (&e.data, vocabulary) {
                (ElementData::Dense(v), _) => (v.clone(), false),
                (ElementData::Descriptors(d), Some(voc)) => {
                    let bovf = match &voc.pca {
                        Some(p) => encode_bovf(&voc.codebook, &p.apply_set(d))?,
                        None => encode_bovf(&voc.codebook, d)?,
                    };
                    let empty = bovf.is_empty();
                    (bovf.values, empty)
                }
                (ElementData::Descriptors(_), None) => {
                    return Err(Error::MissingArtifact {
                        what: format!("codebook of channel `{}`", spec.id),
                        producer: "codebook",
                    })
                }
            };
            Ok(ElementFeature {
                channel_id: spec.id.clone(),
                element: e.element,
                values,
                empty,
            })
        })
        .collect()
}

/// Balanced element-level training set of one channel; empty elements are
/// skipped.
pub fn training_examples(
    cfg: &PipelineConfig,
    spec: &ChannelSpec,
    vocabulary: Option<&ChannelVocabulary>,
    train: &[(&VideoFeatures, Label)],
    scope: Scope,
) -> Result<Vec<TrainingExample>> {
    let mut examples = Vec::new();
    for (video, label) in train {
        for f in element_features(spec, vocabulary, channel_of(video, &spec.id)?)? {
            if f.empty {
                continue;
            }
            examples.push(TrainingExample {
                features: f.values,
                label: *label,
                video_id: video.video_id.clone(),
                element: f.element,
            });
        }
    }
    let (pos, neg) = examples.iter().fold((0, 0), |(p, n), e| match e.label {
        Label::Positive => (p + 1, n),
        Label::Negative => (p, n + 1),
    });
    if pos == 0 || neg == 0 {
        return Err(Error::Validation(format!(
            "channel `{}`: training split yields {pos} positive and {neg} negative non-empty elements",
            spec.id
        )));
    }
    if cfg.training.balance {
        balance_training_set(examples, channel_seed(cfg, "balance", &spec.id, scope))
    } else {
        Ok(examples)
    }
}

pub fn train_channel_model(
    cfg: &PipelineConfig,
    spec: &ChannelSpec,
    vocabulary: Option<&ChannelVocabulary>,
    train: &[(&VideoFeatures, Label)],
    scope: Scope,
) -> Result<ChannelModel> {
    let examples = training_examples(cfg, spec, vocabulary, train, scope)?;
    train_linear_svm(&spec.id, &examples, &cfg.training.svm, channel_seed(cfg, "svm", &spec.id, scope))
}

/// Trains the listed channels (all when `channels` is `None`), fanning out
/// over channels on the configured worker pool.
pub fn train_pipeline(
    cfg: &PipelineConfig,
    train: &[(&VideoFeatures, Label)],
    channels: Option<&[String]>,
    scope: Scope,
) -> Result<TrainedPipeline> {
    let specs: Vec<&ChannelSpec> = cfg
        .channels
        .iter()
        .filter(|c| channels.is_none_or(|ids| ids.contains(&c.id)))
        .collect();
    let videos: Vec<&VideoFeatures> = train.iter().map(|(v, _)| *v).collect();
    let pool = worker_pool(cfg.jobs)?;
    let trained = pool.install(|| {
        specs
            .par_iter()
            .map(|spec| {
                let vocabulary = if spec.kind.is_bovf() {
                    Some(build_vocabulary(cfg, spec, &videos, scope)?)
                } else {
                    None
                };
                let model = train_channel_model(cfg, spec, vocabulary.as_ref(), train, scope)?;
                log::debug!(
                    "trained channel `{}` on {}+{} examples",
                    spec.id,
                    model.positives,
                    model.negatives
                );
                Ok(TrainedChannel {
                    spec: (*spec).clone(),
                    vocabulary,
                    model,
                })
            })
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(TrainedPipeline {
        channels: trained,
        fusion: cfg.training.fusion.clone(),
    })
}

impl TrainedPipeline {
    pub fn channel(&self, id: &str) -> Option<&TrainedChannel> {
        self.channels.iter().find(|c| c.spec.id == id)
    }

    /// Classifies `video` with the channels in `subset` (all when `None`).
    pub fn classify(&self, video: &VideoFeatures, subset: Option<&[String]>) -> Result<VideoDecision> {
        let ids: Vec<&str> = match subset {
            Some(ids) if ids.is_empty() => {
                return Err(Error::config("channels", "channel subset is empty"));
            }
            Some(ids) => ids.iter().map(String::as_str).collect(),
            None => self.channels.iter().map(|c| c.spec.id.as_str()).collect(),
        };
        let mut models = Vec::with_capacity(ids.len());
        let mut features = Vec::new();
        for id in ids {
            let ch = self.channel(id).ok_or_else(|| Error::MissingArtifact {
                what: format!("model of channel `{id}`"),
                producer: "train",
            })?;
            models.push(ch.model.clone());
            features.extend(element_features(&ch.spec, ch.vocabulary.as_ref(), channel_of(video, id)?)?);
        }
        classify_video(&video.video_id, &models, &features, &self.fusion)
    }

    /// Serialized artifacts of every trained channel, in channel order:
    /// PCA projection, codebook, model.
    pub fn artifact_bytes(&self) -> Vec<(String, Vec<u8>)> {
        let mut out = Vec::new();
        for c in &self.channels {
            if let Some(v) = &c.vocabulary {
                if let Some(p) = &v.pca {
                    out.push((format!("{}.pca", c.spec.id), to_bytes(p)));
                }
                out.push((format!("{}.codebook", c.spec.id), to_bytes(&v.codebook)));
            }
            out.push((format!("{}.model", c.spec.id), to_bytes(&c.model)));
        }
        out
    }
}
