use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{ClassifyError, ConvTextModel, Example, Result};

pub const BCE_EPSILON: f64 = 1e-12;

/// Mean over labels of the binary cross entropy, probabilities clamped to
/// `[ε, 1 − ε]`.
pub fn bce_loss(probabilities: &[f64], targets: &[f64]) -> Result<f64> {
    if probabilities.len() != targets.len() {
        return Err(ClassifyError::LengthMismatch(probabilities.len(), targets.len()));
    }
    if probabilities.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = probabilities
        .iter()
        .zip(targets)
        .map(|(&p, &t)| {
            let p = p.clamp(BCE_EPSILON, 1.0 - BCE_EPSILON);
            -(t * p.ln() + (1.0 - t) * (1.0 - p).ln())
        })
        .sum();
    Ok(total / probabilities.len() as f64)
}

/// Labels whose probability is strictly above `threshold`.
pub fn predict_tags(model: &ConvTextModel, ids: &[u32], threshold: f64) -> Result<BTreeSet<String>> {
    let probs = model.forward(ids)?;
    Ok(model
        .label_names()
        .iter()
        .zip(probs)
        .filter(|(_, p)| *p > threshold)
        .map(|(name, _)| name.clone())
        .collect())
}

pub fn gbv_probability(model: &ConvTextModel, ids: &[u32]) -> Result<f64> {
    if model.num_labels() != 1 {
        return Err(ClassifyError::NotBinaryModel(model.num_labels()));
    }
    Ok(model.forward(ids)?[0])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalMetrics {
    pub bce: f64,
    /// Fraction of documents whose whole thresholded label vector is right.
    pub subset_accuracy: f64,
    /// Micro-averaged; 1.0 when nothing is predicted positive.
    pub precision: f64,
    /// Micro-averaged; 1.0 when no target is positive.
    pub recall: f64,
}

impl EvalMetrics {
    /// Scores precomputed probability vectors against targets.
    pub fn from_predictions(
        predictions: &[Vec<f64>],
        targets: &[Vec<f64>],
        threshold: f64,
    ) -> Result<Self> {
        if predictions.is_empty() {
            return Err(ClassifyError::EmptyDataset);
        }
        if predictions.len() != targets.len() {
            return Err(ClassifyError::LengthMismatch(predictions.len(), targets.len()));
        }
        let (mut loss, mut exact) = (0.0, 0usize);
        let (mut tp, mut fp, mut fneg) = (0usize, 0usize, 0usize);
        for (p, t) in predictions.iter().zip(targets) {
            loss += bce_loss(p, t)?;
            let mut all_match = true;
            for (&pi, &ti) in p.iter().zip(t) {
                let predicted = pi > threshold;
                let actual = ti > 0.5;
                all_match &= predicted == actual;
                match (predicted, actual) {
                    (true, true) => tp += 1,
                    (true, false) => fp += 1,
                    (false, true) => fneg += 1,
                    (false, false) => {}
                }
            }
            exact += usize::from(all_match);
        }
        let n = predictions.len() as f64;
        let ratio = |num: usize, den: usize| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        Ok(Self {
            bce: loss / n,
            subset_accuracy: exact as f64 / n,
            precision: ratio(tp, tp + fp),
            recall: ratio(tp, tp + fneg),
        })
    }
}

pub fn evaluate(model: &ConvTextModel, dataset: &[Example], threshold: f64) -> Result<EvalMetrics> {
    if dataset.is_empty() {
        return Err(ClassifyError::EmptyDataset);
    }
    let predictions = dataset
        .iter()
        .map(|ex| model.forward(&ex.ids))
        .collect::<Result<Vec<_>>>()?;
    let targets: Vec<Vec<f64>> = dataset.iter().map(|ex| ex.targets.clone()).collect();
    EvalMetrics::from_predictions(&predictions, &targets, threshold)
}
