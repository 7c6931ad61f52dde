use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::media_io::{DatasetManifest, Label};

/// Stratified assignment of videos to `k` folds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub seed: u64,
    pub assignments: BTreeMap<String, usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, video_id: &str) -> Option<usize> {
        self.assignments.get(video_id).copied()
    }

    pub fn is_test(&self, video_id: &str, fold: usize) -> bool {
        self.fold_of(video_id) == Some(fold)
    }

    /// (train, test) split of `manifest` for `fold`, each in manifest order.
    pub fn split(&self, manifest: &DatasetManifest, fold: usize) -> (DatasetManifest, DatasetManifest) {
        (
            manifest.filter(|e| !self.is_test(&e.video_id, fold)),
            manifest.filter(|e| self.is_test(&e.video_id, fold)),
        )
    }
}

/// Shuffles each class under `seed` and deals it round-robin over the folds.
/// The negative class continues the deal where the positive one stopped, so
/// total fold sizes also differ by at most one.
pub fn make_folds(manifest: &DatasetManifest, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Contract(format!("cross-validation needs k >= 2, got {k}")));
    }
    let mut rng = crate::seed::rng(seed);
    let mut assignments = BTreeMap::new();
    let mut next = 0;
    for label in [Label::Positive, Label::Negative] {
        let mut ids: Vec<&str> = manifest
            .entries()
            .iter()
            .filter(|e| e.label == label)
            .map(|e| e.video_id.as_str())
            .collect();
        if ids.len() < k {
            return Err(Error::Validation(format!(
                "{k}-fold cross-validation needs at least {k} videos per class; class {label} has {}",
                ids.len()
            )));
        }
        ids.shuffle(&mut rng);
        for id in ids {
            assignments.insert(id.to_string(), next);
            next = (next + 1) % k;
        }
    }
    Ok(FoldPlan { k, seed, assignments })
}
