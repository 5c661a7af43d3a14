//! Accuracy, macro F1 and weighted F1 from a confusion matrix.
//!
//! Conventions: precision or recall with a zero denominator is 0. A class
//! with no gold support counts towards the macro average only if it was
//! predicted at least once (its F1 is then 0); classes absent from both
//! gold and predictions are left out.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("{pred} predictions for {gold} gold labels")]
    LengthMismatch { pred: usize, gold: usize },
    #[error("cannot evaluate an empty prediction set")]
    Empty,
    #[error("label {label} out of range for {n_classes} classes")]
    LabelOutOfRange { label: usize, n_classes: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalResult {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    /// `confusion[gold][pred]`.
    pub confusion: Vec<Vec<u64>>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
    pub predicted: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl EvalResult {
    pub fn class_scores(&self) -> Vec<ClassScores> {
        let k = self.confusion.len();
        (0..k)
            .map(|c| {
                let tp = self.confusion[c][c];
                let support: u64 = self.confusion[c].iter().sum();
                let predicted: u64 = (0..k).map(|g| self.confusion[g][c]).sum();
                let precision = ratio(tp, predicted);
                let recall = ratio(tp, support);
                let f1 = if precision + recall > 0.0 {
                    2.0 * precision * recall / (precision + recall)
                } else {
                    0.0
                };
                ClassScores {
                    precision,
                    recall,
                    f1,
                    support,
                    predicted,
                }
            })
            .collect()
    }
}

pub fn evaluate(
    pred: &[usize],
    gold: &[usize],
    n_classes: usize,
) -> Result<EvalResult, MetricsError> {
    if pred.len() != gold.len() {
        return Err(MetricsError::LengthMismatch {
            pred: pred.len(),
            gold: gold.len(),
        });
    }
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let mut confusion = vec![vec![0u64; n_classes]; n_classes];
    for (&p, &g) in pred.iter().zip(gold) {
        for label in [p, g] {
            if label >= n_classes {
                return Err(MetricsError::LabelOutOfRange { label, n_classes });
            }
        }
        confusion[g][p] += 1;
    }
    let correct: u64 = (0..n_classes).map(|c| confusion[c][c]).sum();
    let mut result = EvalResult {
        accuracy: correct as f64 / pred.len() as f64,
        macro_f1: 0.0,
        weighted_f1: 0.0,
        confusion,
    };
    let scores = result.class_scores();
    let counted: Vec<&ClassScores> = scores
        .iter()
        .filter(|s| s.support > 0 || s.predicted > 0)
        .collect();
    result.macro_f1 = counted.iter().map(|s| s.f1).sum::<f64>() / counted.len() as f64;
    result.weighted_f1 =
        scores.iter().map(|s| s.f1 * s.support as f64).sum::<f64>() / pred.len() as f64;
    Ok(result)
}
