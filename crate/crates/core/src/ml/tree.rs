//! CART decision tree with Gini impurity.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::Prediction;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct TreeConfig {
    /// Features examined per split; `None` examines all of them.
    pub max_features: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
enum Node {
    /// Class fractions of the training rows that reached the leaf.
    Leaf { class: u32, distribution: Vec<f64> },
    Split { feature: u32, threshold: f64, left: u32, right: u32 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    class_count: usize,
    feature_count: usize,
    nodes: Vec<Node>,
}

/// Weighted child impurity as the exact fraction `num / den` of
/// Σ l_c²/n_l + Σ r_c²/n_r; larger means purer children.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn better_than(self, other: Score) -> std::cmp::Ordering {
        (self.num * other.den).cmp(&(other.num * self.den))
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: Score,
    feature: usize,
    threshold: f64,
}

impl Candidate {
    /// Higher score wins; ties go to the lower feature, then lower threshold.
    fn beats(&self, other: &Candidate) -> bool {
        use std::cmp::Ordering::*;
        match self.score.better_than(other.score) {
            Greater => true,
            Less => false,
            Equal => (self.feature, self.threshold) < (other.feature, other.threshold),
        }
    }
}

pub(crate) fn validate(rows: &[Vec<f64>], labels: &[usize], class_count: usize) -> Result<usize> {
    if rows.is_empty() {
        return Err(Error::Training("tree training needs at least one row".into()));
    }
    if rows.len() != labels.len() {
        return Err(Error::Training(format!("{} rows but {} labels", rows.len(), labels.len())));
    }
    let d = rows[0].len();
    if d == 0 {
        return Err(Error::Training("rows have no features".into()));
    }
    for r in rows {
        if r.len() != d {
            return Err(Error::Training("rows differ in length".into()));
        }
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::Training("non-finite feature value".into()));
        }
    }
    if let Some(&c) = labels.iter().find(|&&c| c >= class_count) {
        return Err(Error::Training(format!("label {c} outside {class_count} classes")));
    }
    Ok(d)
}

fn best_split_on(rows: &[Vec<f64>], labels: &[usize], idx: &[usize], f: usize, k: usize) -> Option<Candidate> {
    let mut pairs: Vec<(f64, usize)> = idx.iter().map(|&i| (rows[i][f], labels[i])).collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    if pairs[0].0 == pairs[pairs.len() - 1].0 {
        return None;
    }
    let n = pairs.len() as u64;
    let mut left = vec![0u64; k];
    let mut right = vec![0u64; k];
    for &(_, c) in &pairs {
        right[c] += 1;
    }
    let mut left_sq = 0u64;
    let mut right_sq: u64 = right.iter().map(|&r| r * r).sum();
    let mut best: Option<Candidate> = None;
    for i in 0..pairs.len() - 1 {
        let c = pairs[i].1;
        left_sq += 2 * left[c] + 1;
        right_sq -= 2 * right[c] - 1;
        left[c] += 1;
        right[c] -= 1;
        let (a, b) = (pairs[i].0, pairs[i + 1].0);
        if a == b {
            continue;
        }
        let nl = i as u64 + 1;
        let nr = n - nl;
        let score = Score {
            num: left_sq as u128 * nr as u128 + right_sq as u128 * nl as u128,
            den: nl as u128 * nr as u128,
        };
        let mut threshold = a + (b - a) / 2.0;
        if threshold >= b {
            threshold = a;
        }
        let cand = Candidate { score, feature: f, threshold };
        if best.as_ref().is_none_or(|cur| cand.score.better_than(cur.score).is_gt()) {
            best = Some(cand);
        }
    }
    best
}

impl DecisionTree {
    pub fn train(rows: &[Vec<f64>], labels: &[usize], class_count: usize) -> Result<DecisionTree> {
        let idx: Vec<usize> = (0..rows.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        Self::grow(rows, labels, &idx, class_count, TreeConfig::default(), &mut rng)
    }

    /// Grows a tree on `idx` (duplicates act as sample weights). The
    /// generator is consulted only when `max_features` limits the search.
    pub fn grow<R: Rng>(
        rows: &[Vec<f64>],
        labels: &[usize],
        idx: &[usize],
        class_count: usize,
        config: TreeConfig,
        rng: &mut R,
    ) -> Result<DecisionTree> {
        let d = validate(rows, labels, class_count)?;
        if idx.is_empty() {
            return Err(Error::Training("tree training needs at least one row".into()));
        }
        let k = config.max_features.unwrap_or(d).clamp(1, d);
        let mut nodes = vec![Node::Leaf { class: 0, distribution: Vec::new() }];
        let mut stack = vec![(0usize, idx.to_vec())];
        let mut order: Vec<usize> = (0..d).collect();
        while let Some((slot, node_idx)) = stack.pop() {
            let mut counts = vec![0usize; class_count];
            for &i in &node_idx {
                counts[labels[i]] += 1;
            }
            let mut majority = 0;
            for c in 1..class_count {
                if counts[c] > counts[majority] {
                    majority = c;
                }
            }
            let n = node_idx.len() as f64;
            let leaf = Node::Leaf {
                class: majority as u32,
                distribution: counts.iter().map(|&c| c as f64 / n).collect(),
            };
            if node_idx.len() < 2 || counts[majority] == node_idx.len() {
                nodes[slot] = leaf;
                continue;
            }
            if k < d {
                order.shuffle(rng);
            }
            let mut best: Option<Candidate> = None;
            let mut examined = 0;
            for &f in &order {
                if examined >= k {
                    break;
                }
                if let Some(c) = best_split_on(rows, labels, &node_idx, f, class_count) {
                    examined += 1;
                    if best.as_ref().is_none_or(|b| c.beats(b)) {
                        best = Some(c);
                    }
                }
            }
            let Some(split) = best else {
                nodes[slot] = leaf;
                continue;
            };
            let (l, r): (Vec<usize>, Vec<usize>) =
                node_idx.iter().partition(|&&i| rows[i][split.feature] <= split.threshold);
            let left = nodes.len();
            nodes.push(Node::Leaf { class: 0, distribution: Vec::new() });
            nodes.push(Node::Leaf { class: 0, distribution: Vec::new() });
            nodes[slot] = Node::Split {
                feature: split.feature as u32,
                threshold: split.threshold,
                left: left as u32,
                right: left as u32 + 1,
            };
            stack.push((left + 1, r));
            stack.push((left, l));
        }
        Ok(DecisionTree { class_count, feature_count: d, nodes })
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, left as usize).max(walk(nodes, right as usize)),
            }
        }
        walk(&self.nodes, 0)
    }

    fn leaf(&self, x: &[f64]) -> (usize, &[f64]) {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class, distribution } => return (*class as usize, distribution),
                Node::Split { feature, threshold, left, right } => {
                    i = if x[*feature as usize] <= *threshold { *left } else { *right } as usize;
                }
            }
        }
    }

    /// Majority class of the leaf reached by `x`, with its class fraction.
    pub fn predict(&self, x: &[f64]) -> Prediction {
        let (class, dist) = self.leaf(x);
        Prediction { class_index: class, confidence: dist[class] }
    }

    pub fn predict_class(&self, x: &[f64]) -> usize {
        self.leaf(x).0
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        self.leaf(x).1.to_vec()
    }
}
