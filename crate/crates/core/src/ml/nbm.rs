//! Multinomial Naive Bayes over token-count bags with add-one smoothing.

use serde::{Deserialize, Serialize};

use super::{softmax_in_place, Prediction};
use crate::error::{Error, Result};

pub const ALPHA: f64 = 1.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Nbm {
    class_count: usize,
    /// `-inf` for classes absent from training.
    log_prior: Vec<f64>,
    /// Row per class, column per vocabulary index; column 0 (unknown) unused.
    log_likelihood: Vec<Vec<f64>>,
}

impl Nbm {
    /// `bags` hold vocabulary indices; index 0 (unknown) is ignored.
    pub fn train(bags: &[Vec<usize>], labels: &[usize], class_count: usize, vocab_size: usize) -> Result<Nbm> {
        if bags.is_empty() {
            return Err(Error::Training("naive Bayes needs at least one training bag".into()));
        }
        if bags.len() != labels.len() {
            return Err(Error::Training(format!("{} bags but {} labels", bags.len(), labels.len())));
        }
        if let Some(&c) = labels.iter().find(|&&c| c >= class_count) {
            return Err(Error::Training(format!("label {c} outside {class_count} classes")));
        }
        let mut docs = vec![0usize; class_count];
        let mut counts = vec![vec![0u64; vocab_size.max(1)]; class_count];
        for (bag, &c) in bags.iter().zip(labels) {
            docs[c] += 1;
            for &t in bag {
                if t != 0 && t < vocab_size {
                    counts[c][t] += 1;
                }
            }
        }
        let n = bags.len() as f64;
        let known = vocab_size.saturating_sub(1) as f64;
        let log_prior = docs
            .iter()
            .map(|&d| if d == 0 { f64::NEG_INFINITY } else { (d as f64 / n).ln() })
            .collect();
        let log_likelihood = counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().skip(1).sum();
                let denom = (total as f64 + ALPHA * known).ln();
                let mut out: Vec<f64> = row.iter().map(|&k| (k as f64 + ALPHA).ln() - denom).collect();
                out[0] = 0.0;
                out
            })
            .collect();
        Ok(Nbm { class_count, log_prior, log_likelihood })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Posterior over classes. A bag with no known tokens carries no
    /// evidence and yields the uniform distribution.
    pub fn predict_proba(&self, bag: &[usize]) -> Vec<f64> {
        let vocab = self.log_likelihood.first().map_or(0, Vec::len);
        let known: Vec<usize> = bag.iter().copied().filter(|&t| t != 0 && t < vocab).collect();
        if known.is_empty() {
            return vec![1.0 / self.class_count as f64; self.class_count];
        }
        let mut scores: Vec<f64> = (0..self.class_count)
            .map(|c| {
                let prior = self.log_prior[c];
                if prior == f64::NEG_INFINITY {
                    return prior;
                }
                prior + known.iter().map(|&t| self.log_likelihood[c][t]).sum::<f64>()
            })
            .collect();
        softmax_in_place(&mut scores);
        scores
    }

    pub fn predict(&self, bag: &[usize]) -> Prediction {
        Prediction::from_distribution(&self.predict_proba(bag))
    }
}
