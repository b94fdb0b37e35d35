//! Precision, recall and F1 from a confusion count.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScore {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Rows of this class in the truth.
    pub support: usize,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub per_class: Vec<ClassScore>,
    /// Unweighted mean over classes present in the truth.
    pub macro_f1: f64,
    /// Support-weighted mean over classes present in the truth.
    pub weighted_f1: f64,
    pub accuracy: f64,
}

/// Precision is 0 when nothing was predicted for a class; F1 is 0 when
/// precision and recall are both 0.
pub fn f1_scores(predictions: &[usize], truth: &[usize], class_count: usize) -> Result<F1Report> {
    if predictions.len() != truth.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} labels",
            predictions.len(),
            truth.len()
        )));
    }
    if truth.is_empty() {
        return Err(Error::InvalidInput("no labels to score".into()));
    }
    if let Some(&c) = predictions.iter().chain(truth).find(|&&c| c >= class_count) {
        return Err(Error::InvalidInput(format!("class {c} outside {class_count} classes")));
    }
    let mut tp = vec![0usize; class_count];
    let mut fp = vec![0usize; class_count];
    let mut fn_ = vec![0usize; class_count];
    for (&p, &t) in predictions.iter().zip(truth) {
        if p == t {
            tp[t] += 1;
        } else {
            fp[p] += 1;
            fn_[t] += 1;
        }
    }
    let per_class: Vec<ClassScore> = (0..class_count)
        .map(|c| {
            let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
            ClassScore {
                precision: ratio(tp[c], tp[c] + fp[c]),
                recall: ratio(tp[c], tp[c] + fn_[c]),
                // 2PR/(P+R) simplifies to 2TP/(2TP+FP+FN), which avoids
                // compounding rounding.
                f1: ratio(2 * tp[c], 2 * tp[c] + fp[c] + fn_[c]),
                support: tp[c] + fn_[c],
                tp: tp[c],
                fp: fp[c],
                fn_: fn_[c],
            }
        })
        .collect();
    let present: Vec<&ClassScore> = per_class.iter().filter(|s| s.support > 0).collect();
    let macro_f1 = present.iter().map(|s| s.f1).sum::<f64>() / present.len() as f64;
    let weighted_f1 = present.iter().map(|s| s.f1 * s.support as f64).sum::<f64>() / truth.len() as f64;
    let accuracy = tp.iter().sum::<usize>() as f64 / truth.len() as f64;
    Ok(F1Report { per_class, macro_f1, weighted_f1, accuracy })
}
