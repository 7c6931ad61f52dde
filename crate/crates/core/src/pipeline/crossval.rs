//! k-fold cross-validation of every configured channel subset.

use std::collections::HashMap;

use rayon::prelude::*;

use super::config::{Configuration, PipelineConfig};
use super::extract::{worker_pool, VideoFeatures};
use super::train::{train_pipeline, Scope, TrainedPipeline};
use crate::classify::VideoDecision;
use crate::error::{Error, Result};
use crate::eval::{make_folds, ConfusionMatrix, EvalReport, FoldPlan, RunResult};
use crate::media_io::{DatasetManifest, Label};

#[derive(Debug, Clone)]
pub struct FoldOutcome {
    pub fold: usize,
    pub pipeline: TrainedPipeline,
    /// Test-video decisions per configuration, in configuration order.
    pub decisions: Vec<Vec<VideoDecision>>,
}

#[derive(Debug, Clone)]
pub struct CrossValidation {
    pub plan: FoldPlan,
    pub configurations: Vec<Configuration>,
    pub folds: Vec<FoldOutcome>,
    pub report: EvalReport,
}

pub fn fold_plan(cfg: &PipelineConfig, manifest: &DatasetManifest) -> Result<FoldPlan> {
    make_folds(manifest, cfg.evaluation.folds, crate::seed::derive(cfg.seed, "folds", 0))
}

/// Looks up the features of every manifest video, in manifest order.
pub fn align_features<'a>(
    manifest: &DatasetManifest,
    features: &'a [VideoFeatures],
) -> Result<Vec<(&'a VideoFeatures, Label)>> {
    let by_id: HashMap<&str, &VideoFeatures> = features.iter().map(|f| (f.video_id.as_str(), f)).collect();
    manifest
        .entries()
        .iter()
        .map(|e| {
            by_id
                .get(e.video_id.as_str())
                .map(|f| (*f, e.label))
                .ok_or_else(|| Error::MissingArtifact {
                    what: format!("features of video `{}`", e.video_id),
                    producer: "extract",
                })
        })
        .collect()
}

fn used_channels(cfg: &PipelineConfig, configurations: &[Configuration]) -> Vec<String> {
    cfg.channels
        .iter()
        .filter(|c| configurations.iter().any(|k| k.channels.contains(&c.id)))
        .map(|c| c.id.clone())
        .collect()
}

/// Trains fold `fold` on its training split only.
pub fn train_fold(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    features: &[VideoFeatures],
    plan: &FoldPlan,
    fold: usize,
    channels: &[String],
) -> Result<TrainedPipeline> {
    let (train, _) = plan.split(manifest, fold);
    let data = align_features(&train, features)?;
    train_pipeline(cfg, &data, Some(channels), Scope::Fold(fold))
}

/// Runs the full protocol: folds, per-fold training, classification of the
/// test videos under every configuration, confusion matrices.
pub fn cross_validate(
    cfg: &PipelineConfig,
    manifest: &DatasetManifest,
    features: &[VideoFeatures],
) -> Result<CrossValidation> {
    let configurations = cfg.configurations();
    for c in &configurations {
        if c.channels.is_empty() {
            return Err(Error::config("evaluation.configurations", format!("configuration `{}` has no channels", c.id)));
        }
    }
    let channels = used_channels(cfg, &configurations);
    let plan = fold_plan(cfg, manifest)?;
    let pool = worker_pool(cfg.jobs)?;
    let mut folds = Vec::with_capacity(plan.k);
    let mut results: Vec<RunResult> = configurations
        .iter()
        .map(|c| RunResult {
            configuration_id: c.id.clone(),
            folds: Vec::with_capacity(plan.k),
        })
        .collect();
    for fold in 0..plan.k {
        let annotate = |e: Error| Error::Fold {
            fold,
            source: Box::new(e),
        };
        let pipeline = train_fold(cfg, manifest, features, &plan, fold, &channels).map_err(annotate)?;
        let (_, test) = plan.split(manifest, fold);
        let test_data = align_features(&test, features).map_err(annotate)?;
        let mut decisions = Vec::with_capacity(configurations.len());
        for (conf, result) in configurations.iter().zip(results.iter_mut()) {
            let ds: Vec<VideoDecision> = pool
                .install(|| {
                    test_data
                        .par_iter()
                        .map(|(v, _)| pipeline.classify(v, Some(&conf.channels)))
                        .collect::<Result<Vec<_>>>()
                })
                .map_err(annotate)?;
            let cm = ConfusionMatrix::from_decisions(&ds, |id| test.get(id).map(|e| e.label)).map_err(annotate)?;
            log::info!(
                "fold {fold} `{}`: tp {} fn {} fp {} tn {}",
                conf.id,
                cm.tp,
                cm.fn_,
                cm.fp,
                cm.tn
            );
            result.folds.push(cm);
            decisions.push(ds);
        }
        folds.push(FoldOutcome {
            fold,
            pipeline,
            decisions,
        });
    }
    Ok(CrossValidation {
        plan,
        configurations,
        folds,
        report: EvalReport {
            options: cfg.evaluation.report.clone(),
            results,
        },
    })
}
