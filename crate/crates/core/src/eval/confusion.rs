use serde::{Deserialize, Serialize};

use crate::classify::VideoDecision;
use crate::error::{Error, Result};
use crate::media_io::Label;

/// Counts are reals so that fold averages keep the same type.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: f64,
    #[serde(rename = "fn")]
    pub fn_: f64,
    pub fp: f64,
    pub tn: f64,
}

impl ConfusionMatrix {
    pub fn new(tp: f64, fn_: f64, fp: f64, tn: f64) -> Result<ConfusionMatrix> {
        if ![tp, fn_, fp, tn].iter().all(|c| c.is_finite() && *c >= 0.0) {
            return Err(Error::Validation(format!(
                "confusion counts must be finite and non-negative: {tp} {fn_} {fp} {tn}"
            )));
        }
        Ok(ConfusionMatrix { tp, fn_, fp, tn })
    }

    pub fn record(&mut self, truth: Label, predicted: Label) {
        match (truth, predicted) {
            (Label::Positive, Label::Positive) => self.tp += 1.0,
            (Label::Positive, Label::Negative) => self.fn_ += 1.0,
            (Label::Negative, Label::Positive) => self.fp += 1.0,
            (Label::Negative, Label::Negative) => self.tn += 1.0,
        }
    }

    /// Tallies decisions against ground truth looked up by video id.
    pub fn from_decisions<'a>(
        decisions: impl IntoIterator<Item = &'a VideoDecision>,
        truth: impl Fn(&str) -> Option<Label>,
    ) -> Result<ConfusionMatrix> {
        let mut cm = ConfusionMatrix::default();
        for d in decisions {
            let t = truth(&d.video_id)
                .ok_or_else(|| Error::Invariant(format!("no ground truth for video `{}`", d.video_id)))?;
            cm.record(t, d.label);
        }
        Ok(cm)
    }

    pub fn tpr(&self) -> Option<f64> {
        let d = self.tp + self.fn_;
        (d > 0.0).then(|| self.tp / d)
    }

    pub fn fpr(&self) -> Option<f64> {
        let d = self.fp + self.tn;
        (d > 0.0).then(|| self.fp / d)
    }

    pub fn total(&self) -> f64 {
        self.tp + self.fn_ + self.fp + self.tn
    }
}

/// (true positive rate, false positive rate).
pub fn roc_point(cm: &ConfusionMatrix) -> Result<(f64, f64)> {
    let tpr = cm.tpr().ok_or(Error::UndefinedRate("true positive rate"))?;
    let fpr = cm.fpr().ok_or(Error::UndefinedRate("false positive rate"))?;
    Ok((tpr, fpr))
}

/// Per-fold outcome of one channel configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub configuration_id: String,
    pub folds: Vec<ConfusionMatrix>,
}

impl RunResult {
    pub fn tprs(&self) -> Vec<f64> {
        self.folds.iter().filter_map(ConfusionMatrix::tpr).collect()
    }

    pub fn fprs(&self) -> Vec<f64> {
        self.folds.iter().filter_map(ConfusionMatrix::fpr).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn table_counts_give_the_published_rates() {
        // same proportions as the fractional 400/400 counts, scaled to integers
        let cm = ConfusionMatrix::new(913.0, 87.0, 75.0, 925.0).unwrap();
        assert_eq!(roc_point(&cm).unwrap(), (0.913, 0.075));
        let cm = ConfusionMatrix::new(980.0, 20.0, 126.0, 874.0).unwrap();
        assert_eq!(roc_point(&cm).unwrap(), (0.980, 0.126));
        let (tpr, fpr) = roc_point(&ConfusionMatrix::new(365.2, 34.8, 30.0, 370.0).unwrap()).unwrap();
        assert!((tpr - 0.913).abs() < 1e-12 && (fpr - 0.075).abs() < 1e-12);
    }

    #[test]
    fn trivial_and_undefined() {
        assert_eq!(roc_point(&ConfusionMatrix::new(1.0, 0.0, 0.0, 1.0).unwrap()).unwrap(), (1.0, 0.0));
        assert!(matches!(
            roc_point(&ConfusionMatrix::new(0.0, 0.0, 1.0, 1.0).unwrap()),
            Err(Error::UndefinedRate(_))
        ));
        assert!(matches!(
            roc_point(&ConfusionMatrix::new(1.0, 1.0, 0.0, 0.0).unwrap()),
            Err(Error::UndefinedRate(_))
        ));
        assert!(ConfusionMatrix::new(-1.0, 0.0, 0.0, 0.0).is_err());
    }

    proptest! {
        #[test]
        fn rates_in_unit_interval_and_tpr_monotone(p in 1u32..200, tp in 0u32..200, fp in 0u32..200, n in 1u32..200) {
            let tp = tp.min(p);
            let fp = fp.min(n);
            let cm = ConfusionMatrix::new(tp as f64, (p - tp) as f64, fp as f64, (n - fp) as f64).unwrap();
            let (tpr, fpr) = roc_point(&cm).unwrap();
            prop_assert!((0.0..=1.0).contains(&tpr) && (0.0..=1.0).contains(&fpr));
            if tp < p {
                let more = ConfusionMatrix { tp: cm.tp + 1.0, fn_: cm.fn_ - 1.0, ..cm };
                prop_assert!(roc_point(&more).unwrap().0 >= tpr);
            }
        }
    }
}
