//! Linear max-margin training by stochastic sub-gradient descent on the
//! primal hinge objective.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainingExample;
use crate::error::{Error, Result};
use crate::media_io::artifact::{tag, Artifact, PayloadReader, PayloadWriter};
use crate::media_io::Label;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SvmParams {
    pub c: f64,
    pub epochs: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        SvmParams { c: 1.0, epochs: 200 }
    }
}

/// Trained linear decision function of one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub channel_id: String,
    pub weights: Vec<f64>,
    pub bias: f64,
    pub c: f64,
    pub seed: u64,
    pub positives: usize,
    pub negatives: usize,
}

impl ChannelModel {
    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    pub fn margin(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }

    fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::Validation(format!("model `{}` has no weights", self.channel_id)));
        }
        if !self.weights.iter().all(|w| w.is_finite()) || !self.bias.is_finite() {
            return Err(Error::Validation(format!(
                "model `{}` has non-finite parameters",
                self.channel_id
            )));
        }
        Ok(())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

fn sign(label: Label) -> f64 {
    f64::from(label.sign())
}

/// `J(w, b) = ||w||^2 / (2 C n) + mean_i max(0, 1 - y_i (w . x_i + b))`.
pub fn svm_objective(examples: &[TrainingExample], c: f64, w: &[f64], b: f64) -> f64 {
    let n = examples.len() as f64;
    let reg = dot(w, w) / (2.0 * c * n);
    let loss: f64 = examples
        .iter()
        .map(|e| (1.0 - sign(e.label) * (dot(w, &e.features) + b)).max(0.0))
        .sum();
    reg + loss / n
}

fn check_examples(examples: &[TrainingExample]) -> Result<usize> {
    let Some(first) = examples.first() else {
        return Err(Error::Validation("no training examples".into()));
    };
    let dim = first.features.len();
    if dim == 0 {
        return Err(Error::Validation("training features are empty".into()));
    }
    for e in examples {
        if e.features.len() != dim {
            return Err(Error::Validation(format!(
                "example {} has {} features, expected {dim}",
                e.describe(),
                e.features.len()
            )));
        }
        if !e.features.iter().all(|v| v.is_finite()) {
            return Err(Error::Validation(format!("example {} has a non-finite feature", e.describe())));
        }
    }
    if examples.len() < 2 || !examples.iter().any(|e| e.label == Label::Positive) || !examples.iter().any(|e| e.label == Label::Negative) {
        return Err(Error::Validation("training needs examples of both labels".into()));
    }
    Ok(dim)
}

/// Pegasos-style training with an unregularized bias. Each epoch visits the
/// examples in a fresh seeded order with step `1 / (lambda t)`,
/// `lambda = 1 / (C n)`. The result is whichever of the last iterate and the
/// average of the second-half epoch iterates has the lower objective.
pub fn train_linear_svm(
    channel_id: &str,
    examples: &[TrainingExample],
    params: &SvmParams,
    seed: u64,
) -> Result<ChannelModel> {
    let dim = check_examples(examples)?;
    if !(params.c > 0.0 && params.c.is_finite()) || params.epochs == 0 {
        return Err(Error::Contract(format!(
            "SVM needs C > 0 and at least one epoch (got C = {}, epochs = {})",
            params.c, params.epochs
        )));
    }
    let n = examples.len();
    let lambda = 1.0 / (params.c * n as f64);
    let mut rng = crate::seed::rng(seed);
    let mut order: Vec<usize> = (0..n).collect();

    // w = scale * v keeps the per-step shrink O(1)
    let mut v = vec![0.0; dim];
    let mut scale = 1.0;
    let mut b = 0.0;
    let mut avg_w = vec![0.0; dim];
    let mut avg_b = 0.0;
    let mut averaged = 0usize;
    let mut t = 0usize;
    for epoch in 0..params.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let e = &examples[i];
            let y = sign(e.label);
            let violated = y * (scale * dot(&v, &e.features) + b) < 1.0;
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|x| *x = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if violated {
                let step = eta * y / scale;
                v.iter_mut().zip(&e.features).for_each(|(w, x)| *w += step * x);
                b += eta * y;
            }
            if scale < 1e-100 {
                v.iter_mut().for_each(|x| *x *= scale);
                scale = 1.0;
            }
        }
        if 2 * epoch >= params.epochs {
            avg_w.iter_mut().zip(&v).for_each(|(a, x)| *a += scale * x);
            avg_b += b;
            averaged += 1;
        }
    }
    let last_w: Vec<f64> = v.iter().map(|x| scale * x).collect();
    avg_w.iter_mut().for_each(|a| *a /= averaged as f64);
    avg_b /= averaged as f64;
    let j_last = svm_objective(examples, params.c, &last_w, b);
    let j_avg = svm_objective(examples, params.c, &avg_w, avg_b);
    let (weights, bias) = if j_avg <= j_last { (avg_w, avg_b) } else { (last_w, b) };
    let positives = examples.iter().filter(|e| e.label == Label::Positive).count();
    let model = ChannelModel {
        channel_id: channel_id.to_string(),
        weights,
        bias,
        c: params.c,
        seed,
        positives,
        negatives: n - positives,
    };
    model.validate().map_err(|e| Error::Invariant(format!("training diverged: {e}")))?;
    Ok(model)
}

impl Artifact for ChannelModel {
    const TAG: u32 = tag::CHANNEL_MODEL;
    const NAME: &'static str = "channel model";

    fn encode(&self, w: &mut PayloadWriter) {
        w.str(&self.channel_id);
        w.dim(self.weights.len());
        w.f64s(&self.weights);
        w.f64(self.bias);
        w.f64(self.c);
        w.u64(self.seed);
        w.u64(self.positives as u64);
        w.u64(self.negatives as u64);
    }

    fn decode(r: &mut PayloadReader<'_>) -> Result<Self> {
        let channel_id = r.str()?;
        let dim = r.dim()?;
        let model = ChannelModel {
            channel_id,
            weights: r.f64s(dim)?,
            bias: r.f64()?,
            c: r.f64()?,
            seed: r.u64()?,
            positives: r.u64()? as usize,
            negatives: r.u64()? as usize,
        };
        model.validate()?;
        Ok(model)
    }
}
