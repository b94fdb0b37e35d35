//! Random forest of CART trees with bootstrap resampling and per-split
//! feature subsetting.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{validate, DecisionTree, TreeConfig};
use super::{derive_seed, Prediction};
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` means ⌈√d⌉.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig { n_trees: 100, features_per_split: None, bootstrap: true, seed: 0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    class_count: usize,
    trees: Vec<DecisionTree>,
}

impl RandomForest {
    /// Trees are grown in parallel; each has its own generator derived from
    /// the master seed, so the result does not depend on scheduling.
    pub fn train(rows: &[Vec<f64>], labels: &[usize], class_count: usize, config: ForestConfig) -> Result<Self> {
        let d = validate(rows, labels, class_count)?;
        let k = config.features_per_split.unwrap_or_else(|| (d as f64).sqrt().ceil() as usize);
        let n = rows.len();
        let trees = (0..config.n_trees.max(1))
            .into_par_iter()
            .map(|t| {
                let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, t as u64));
                let idx: Vec<usize> = if config.bootstrap {
                    (0..n).map(|_| rng.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                DecisionTree::grow(rows, labels, &idx, class_count, TreeConfig { max_features: Some(k) }, &mut rng)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RandomForest { class_count, trees })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn trees(&self) -> &[DecisionTree] {
        &self.trees
    }

    /// Vote fractions per class.
    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        let mut votes = vec![0.0; self.class_count];
        for t in &self.trees {
            votes[t.predict_class(x)] += 1.0;
        }
        let n = self.trees.len() as f64;
        votes.iter_mut().for_each(|v| *v /= n);
        votes
    }

    /// Majority vote, ties to the lowest class index.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        Prediction::from_distribution(&self.predict_proba(x))
    }
}
