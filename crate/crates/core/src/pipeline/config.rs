//! Declarative pipeline configuration (TOML) and the three presets.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classify::{ElementKind, FusionParams, SvmParams};
use crate::codebook::{BUDGET_PER_WORD, DEFAULT_MAX_ITER};
use crate::error::{Error, Result};
use crate::eval::ReportOptions;
use crate::features::{RgbBins, SiftParams, PCA_SIFT_DIM};
use crate::segmentation::{KeyframeParams, DEFAULT_CUT_THRESHOLD, DEFAULT_MIN_SHOT_LEN};
use crate::stip::{StipDescriptorParams, StipParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureKind {
    RgbHistogram,
    HueHistogram,
    Zernike,
    SiftBovf,
    HuesiftBovf,
    PcasiftBovf,
    StipBovf,
    KeyframeStats,
}

impl FeatureKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FeatureKind::RgbHistogram => "rgb-histogram",
            FeatureKind::HueHistogram => "hue-histogram",
            FeatureKind::Zernike => "zernike",
            FeatureKind::SiftBovf => "sift-bovf",
            FeatureKind::HuesiftBovf => "huesift-bovf",
            FeatureKind::PcasiftBovf => "pcasift-bovf",
            FeatureKind::StipBovf => "stip-bovf",
            FeatureKind::KeyframeStats => "keyframe-stats",
        }
    }

    pub fn is_bovf(self) -> bool {
        matches!(
            self,
            FeatureKind::SiftBovf | FeatureKind::HuesiftBovf | FeatureKind::PcasiftBovf | FeatureKind::StipBovf
        )
    }

    /// Element granularities the feature can be computed on.
    pub fn legal_granularities(self) -> &'static [ElementKind] {
        use ElementKind::*;
        match self {
            FeatureKind::StipBovf => &[Shot, WholeVideo],
            FeatureKind::KeyframeStats => &[WholeVideo],
            _ => &[MiddleFrame, Keyframe],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub id: String,
    pub kind: FeatureKind,
    pub granularity: ElementKind,
    /// Histogram bin count (rgb: 64 or 256) or codebook size (BoVF kinds).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bins: Option<usize>,
}

impl ChannelSpec {
    pub fn new(id: &str, kind: FeatureKind, granularity: ElementKind, bins: Option<usize>) -> ChannelSpec {
        ChannelSpec {
            id: id.to_string(),
            kind,
            granularity,
            bins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SegmentationConfig {
    pub cut_threshold: f64,
    pub min_shot_len: usize,
    pub keyframes: KeyframeParams,
}

impl Default for SegmentationConfig {
    fn default() -> Self {
        SegmentationConfig {
            cut_threshold: DEFAULT_CUT_THRESHOLD,
            min_shot_len: DEFAULT_MIN_SHOT_LEN,
            keyframes: KeyframeParams::default(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureConfig {
    pub sift: SiftParams,
    pub stip: StipParams,
    pub stip_descriptor: StipDescriptorParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub svm: SvmParams,
    pub balance: bool,
    pub codebook_max_iter: usize,
    /// Descriptors sampled per codebook word.
    pub codebook_budget_per_word: usize,
    pub fusion: FusionParams,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        TrainingConfig {
            svm: SvmParams::default(),
            balance: true,
            codebook_max_iter: DEFAULT_MAX_ITER,
            codebook_budget_per_word: BUDGET_PER_WORD,
            fusion: FusionParams::default(),
        }
    }
}

/// A named subset of channels evaluated as one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Configuration {
    pub id: String,
    pub channels: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub folds: usize,
    pub report: ReportOptions,
    /// Empty means one configuration per channel plus one with all of them.
    pub configurations: Vec<Configuration>,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig {
            folds: 5,
            report: ReportOptions::default(),
            configurations: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathsConfig {
    pub manifest: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Preset whose channels apply when `channels` is empty.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<String>,
    pub seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub jobs: Option<usize>,
    pub channels: Vec<ChannelSpec>,
    pub segmentation: SegmentationConfig,
    pub features: FeatureConfig,
    pub training: TrainingConfig,
    pub evaluation: EvaluationConfig,
    pub paths: PathsConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            preset: None,
            seed: 0,
            jobs: None,
            channels: Vec::new(),
            segmentation: SegmentationConfig::default(),
            features: FeatureConfig::default(),
            training: TrainingConfig::default(),
            evaluation: EvaluationConfig::default(),
            paths: PathsConfig::default(),
        }
    }
}

pub const PRESETS: [&str; 3] = ["porn", "stuffing", "violence"];

/// Channel lists of the three applications.
pub fn preset_channels(name: &str) -> Option<Vec<ChannelSpec>> {
    use ElementKind::*;
    use FeatureKind::*;
    let c = ChannelSpec::new;
    Some(match name {
        "porn" => vec![
            c("rgb", RgbHistogram, MiddleFrame, Some(64)),
            c("sift", SiftBovf, MiddleFrame, Some(5000)),
            c("huesift", HuesiftBovf, MiddleFrame, Some(5000)),
            c("stip", StipBovf, Shot, Some(5000)),
        ],
        "stuffing" => vec![
            c("rgb", RgbHistogram, Keyframe, Some(256)),
            c("hue", HueHistogram, Keyframe, Some(256)),
            c("zernike", Zernike, Keyframe, None),
            c("sift", SiftBovf, Keyframe, Some(5000)),
            c("pcasift", PcasiftBovf, Keyframe, Some(5000)),
            c("stip", StipBovf, WholeVideo, Some(5000)),
            c("keyframe-stats", KeyframeStats, WholeVideo, None),
        ],
        "violence" => vec![
            c("sift", SiftBovf, MiddleFrame, Some(100)),
            c("stip", StipBovf, Shot, Some(100)),
        ],
        _ => return None,
    })
}

impl PipelineConfig {
    pub fn preset(name: &str) -> Result<PipelineConfig> {
        let channels = preset_channels(name).ok_or_else(|| {
            Error::config("preset", format!("unknown preset `{name}`; expected one of {}", PRESETS.join(", ")))
        })?;
        let cfg = PipelineConfig {
            preset: Some(name.to_string()),
            channels,
            ..PipelineConfig::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_toml(text: &str) -> Result<PipelineConfig> {
        let mut cfg: PipelineConfig = toml::from_str(text).map_err(|e| {
            let span = e.span().map(|s| format!(" (bytes {}..{})", s.start, s.end)).unwrap_or_default();
            Error::config("config", format!("{}{span}", e.message()))
        })?;
        if cfg.channels.is_empty() {
            if let Some(p) = &cfg.preset {
                cfg.channels = preset_channels(p).ok_or_else(|| {
                    Error::config("preset", format!("unknown preset `{p}`; expected one of {}", PRESETS.join(", ")))
                })?;
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<PipelineConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PipelineConfig::from_toml(&text).map_err(|e| match e {
            Error::Config { path: field, message } => Error::Config {
                path: format!("{}: {field}", path.display()),
                message,
            },
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("config serializes")
    }

    pub fn channel(&self, id: &str) -> Option<&ChannelSpec> {
        self.channels.iter().find(|c| c.id == id)
    }

    /// Explicit configurations, or one per channel plus "all".
    pub fn configurations(&self) -> Vec<Configuration> {
        if !self.evaluation.configurations.is_empty() {
            return self.evaluation.configurations.clone();
        }
        let mut out: Vec<Configuration> = self
            .channels
            .iter()
            .map(|c| Configuration {
                id: c.id.clone(),
                channels: vec![c.id.clone()],
            })
            .collect();
        if self.channels.len() > 1 {
            out.push(Configuration {
                id: "all".into(),
                channels: self.channels.iter().map(|c| c.id.clone()).collect(),
            });
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return Err(Error::config("channels", "no channels configured (set `preset` or list channels)"));
        }
        for (i, c) in self.channels.iter().enumerate() {
            let at = |field: &str| format!("channels[{i}].{field}");
            if c.id.is_empty() {
                return Err(Error::config(at("id"), "channel id is empty"));
            }
            if self.channels[..i].iter().any(|d| d.id == c.id) {
                return Err(Error::config(at("id"), format!("duplicate channel id `{}`", c.id)));
            }
            if !c.kind.legal_granularities().contains(&c.granularity) {
                return Err(Error::config(
                    at("granularity"),
                    format!(
                        "{} cannot be computed per {}; allowed: {}",
                        c.kind.as_str(),
                        c.granularity.as_str(),
                        c.kind.legal_granularities().iter().map(|g| g.as_str()).collect::<Vec<_>>().join(", ")
                    ),
                ));
            }
            match (c.kind, c.bins) {
                (FeatureKind::RgbHistogram, Some(b)) if RgbBins::for_cells(b).is_none() => {
                    return Err(Error::config(at("bins"), format!("rgb-histogram supports 64 or 256 bins, got {b}")));
                }
                (FeatureKind::RgbHistogram | FeatureKind::HueHistogram, None) => {
                    return Err(Error::config(at("bins"), "histogram channels need `bins`"));
                }
                (FeatureKind::HueHistogram, Some(0)) => {
                    return Err(Error::config(at("bins"), "hue-histogram needs at least one bin"));
                }
                (k, None) if k.is_bovf() => {
                    return Err(Error::config(at("bins"), "BoVF channels need `bins` (codebook size)"));
                }
                (k, Some(b)) if k.is_bovf() && b < 2 => {
                    return Err(Error::config(at("bins"), "codebook size must be at least 2"));
                }
                (FeatureKind::Zernike | FeatureKind::KeyframeStats, Some(_)) => {
                    return Err(Error::config(at("bins"), format!("{} takes no `bins`", c.kind.as_str())));
                }
                _ => {}
            }
        }
        if self.evaluation.folds < 2 {
            return Err(Error::config("evaluation.folds", "need at least 2 folds"));
        }
        let a = self.evaluation.report.alpha;
        if !(a > 0.0 && a < 1.0) {
            return Err(Error::config("evaluation.report.alpha", "alpha must lie in (0, 1)"));
        }
        if !(self.training.svm.c > 0.0) || self.training.svm.epochs == 0 {
            return Err(Error::config("training.svm", "C must be positive and epochs at least 1"));
        }
        if self.training.codebook_budget_per_word == 0 {
            return Err(Error::config("training.codebook_budget_per_word", "must be at least 1"));
        }
        if self.jobs == Some(0) {
            return Err(Error::config("jobs", "must be at least 1"));
        }
        if !(self.segmentation.cut_threshold > 0.0 && self.segmentation.cut_threshold <= 2.0) {
            return Err(Error::config("segmentation.cut_threshold", "must lie in (0, 2]"));
        }
        if self.segmentation.min_shot_len == 0 {
            return Err(Error::config("segmentation.min_shot_len", "must be at least 1"));
        }
        for (i, conf) in self.evaluation.configurations.iter().enumerate() {
            if conf.channels.is_empty() {
                return Err(Error::config(
                    format!("evaluation.configurations[{i}].channels"),
                    format!("configuration `{}` has no channels", conf.id),
                ));
            }
            for ch in &conf.channels {
                if self.channel(ch).is_none() {
                    return Err(Error::config(
                        format!("evaluation.configurations[{i}].channels"),
                        format!("unknown channel `{ch}`"),
                    ));
                }
            }
        }
        Ok(())
    }

    /// Restricts the channel list to `ids`, keeping their configured order.
    pub fn with_channels(&self, ids: &[&str]) -> Result<PipelineConfig> {
        for id in ids {
            if self.channel(id).is_none() {
                return Err(Error::config("channels", format!("unknown channel `{id}`")));
            }
        }
        let mut cfg = self.clone();
        cfg.channels.retain(|c| ids.contains(&c.id.as_str()));
        cfg.evaluation.configurations.clear();
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Output dimension of a channel's per-element feature vector.
pub fn feature_dim(spec: &ChannelSpec) -> usize {
    match spec.kind {
        FeatureKind::Zernike => crate::features::ZERNIKE_ORDERS.len(),
        FeatureKind::KeyframeStats => 2,
        _ => spec.bins.unwrap_or(0),
    }
}

/// Dimension of the local descriptors a BoVF channel clusters.
pub fn descriptor_dim(kind: FeatureKind) -> usize {
    match kind {
        FeatureKind::SiftBovf => crate::features::SIFT_DIM,
        FeatureKind::HuesiftBovf => crate::features::HUESIFT_DIM,
        FeatureKind::PcasiftBovf => PCA_SIFT_DIM,
        FeatureKind::StipBovf => crate::stip::STIP_DIM,
        _ => 0,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Golden check of the presets against the published parameter lists.
    #[test]
    fn presets_match_the_published_setups() {
        use ElementKind::*;
        use FeatureKind::*;
        let summary = |name: &str| -> Vec<(FeatureKind, ElementKind, Option<usize>)> {
            PipelineConfig::preset(name)
                .unwrap()
                .channels
                .iter()
                .map(|c| (c.kind, c.granularity, c.bins))
                .collect()
        };
        assert_eq!(
            summary("porn"),
            vec![
                (RgbHistogram, MiddleFrame, Some(64)),
                (SiftBovf, MiddleFrame, Some(5000)),
                (HuesiftBovf, MiddleFrame, Some(5000)),
                (StipBovf, Shot, Some(5000)),
            ]
        );
        assert_eq!(
            summary("stuffing"),
            vec![
                (RgbHistogram, Keyframe, Some(256)),
                (HueHistogram, Keyframe, Some(256)),
                (Zernike, Keyframe, None),
                (SiftBovf, Keyframe, Some(5000)),
                (PcasiftBovf, Keyframe, Some(5000)),
                (StipBovf, WholeVideo, Some(5000)),
                (KeyframeStats, WholeVideo, None),
            ]
        );
        assert_eq!(
            summary("violence"),
            vec![(SiftBovf, MiddleFrame, Some(100)), (StipBovf, Shot, Some(100))]
        );
        let p = PipelineConfig::preset("porn").unwrap();
        assert_eq!((p.evaluation.folds, p.evaluation.report.alpha, p.training.svm.c), (5, 0.05, 1.0));
        assert_eq!(feature_dim(p.channel("rgb").unwrap()), 64);
        assert_eq!(feature_dim(PipelineConfig::preset("stuffing").unwrap().channel("zernike").unwrap()), 10);
    }

    #[test]
    fn toml_round_trip_and_preset_expansion() {
        let cfg = PipelineConfig::from_toml("preset = \"violence\"\nseed = 7\n").unwrap();
        assert_eq!(cfg.channels.len(), 2);
        assert_eq!(cfg.seed, 7);
        let again = PipelineConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(again, cfg);
    }

    #[test]
    fn illegal_granularity_names_the_field() {
        let text = r#"
[[channels]]
id = "stip"
kind = "stip-bovf"
granularity = "middle-frame"
bins = 100
"#;
        match PipelineConfig::from_toml(text) {
            Err(Error::Config { path, message }) => {
                assert_eq!(path, "channels[0].granularity");
                assert!(message.contains("stip-bovf"), "{message}");
            }
            other => panic!("{other:?}"),
        }
        let zernike_shot = "[[channels]]\nid = \"z\"\nkind = \"zernike\"\ngranularity = \"shot\"\n";
        assert!(matches!(PipelineConfig::from_toml(zernike_shot), Err(Error::Config { .. })));
    }

    #[test]
    fn schema_errors() {
        let err = PipelineConfig::from_toml("preset = \"violence\"\nsede = 1\n").unwrap_err();
        assert!(err.to_string().contains("sede"), "{err}");
        assert_eq!(err.exit_code(), 1);
        assert!(PipelineConfig::from_toml("preset = \"nope\"").is_err());
        assert!(PipelineConfig::from_toml("").is_err());
        let bad_bins = "[[channels]]\nid = \"rgb\"\nkind = \"rgb-histogram\"\ngranularity = \"keyframe\"\nbins = 100\n";
        assert!(matches!(PipelineConfig::from_toml(bad_bins), Err(Error::Config { path, .. }) if path == "channels[0].bins"));
        let empty = "preset = \"violence\"\n[[evaluation.configurations]]\nid = \"none\"\nchannels = []\n";
        assert!(matches!(PipelineConfig::from_toml(empty), Err(Error::Config { .. })));
    }

    #[test]
    fn default_configurations() {
        let cfg = PipelineConfig::preset("violence").unwrap();
        let ids: Vec<_> = cfg.configurations().into_iter().map(|c| c.id).collect();
        assert_eq!(ids, ["sift", "stip", "all"]);
        let only = cfg.with_channels(&["stip"]).unwrap();
        assert_eq!(only.configurations().len(), 1);
    }
}
