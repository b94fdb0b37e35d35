//! Mini-batch SGD with momentum and best-epoch selection, shared by the
//! fully connected and convolutional networks.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::network::{rng, DropoutMode, Network};
use super::{derive_seed, Prediction};
use crate::error::{Error, Result};
use crate::eval::stratified_split;

/// Samples per parallel gradient task. Partial sums are added in task
/// order, so results do not depend on the thread count.
const GRAD_CHUNK: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub momentum: f64,
    /// Share of the training rows held back to pick the best epoch.
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 50,
            batch_size: 128,
            learning_rate: 0.01,
            momentum: 0.9,
            validation_fraction: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Validation accuracy after each epoch.
    pub epoch_accuracy: Vec<f64>,
    /// Mean training loss of each epoch.
    pub epoch_loss: Vec<f64>,
    /// 1-based epoch whose weights were kept.
    pub best_epoch: usize,
    pub best_accuracy: f64,
    pub validation_rows: usize,
}

pub fn accuracy<N: Network>(net: &N, params: &[f64], xs: &[Vec<f64>], labels: &[usize], idx: &[usize]) -> f64 {
    if idx.is_empty() {
        return 0.0;
    }
    let correct: usize = idx
        .par_iter()
        .map(|&i| usize::from(Prediction::from_distribution(&net.probs(params, &xs[i])).class_index == labels[i]))
        .sum();
    correct as f64 / idx.len() as f64
}

/// Trains `net` and returns the parameters of the epoch with the highest
/// validation accuracy (earliest on ties).
pub fn train_network<N: Network>(
    net: &N,
    xs: &[Vec<f64>],
    labels: &[usize],
    config: &TrainConfig,
) -> Result<(Vec<f64>, TrainHistory)> {
    if xs.is_empty() {
        return Err(Error::Training("network training needs at least one row".into()));
    }
    if xs.len() != labels.len() {
        return Err(Error::Training(format!("{} rows but {} labels", xs.len(), labels.len())));
    }
    if let Some(x) = xs.iter().find(|x| x.len() != net.input_len()) {
        return Err(Error::Training(format!("row has {} inputs, network expects {}", x.len(), net.input_len())));
    }
    if let Some(&c) = labels.iter().find(|&&c| c >= net.class_count()) {
        return Err(Error::Training(format!("label {c} outside {} classes", net.class_count())));
    }
    if config.batch_size == 0 || config.epochs == 0 {
        return Err(Error::Training("epochs and batch size must be positive".into()));
    }

    let (train_idx, mut val_idx) = if config.validation_fraction > 0.0 {
        stratified_split(labels, 1.0 - config.validation_fraction, derive_seed(config.seed, 1))?
    } else {
        ((0..xs.len()).collect(), Vec::new())
    };
    if val_idx.is_empty() {
        val_idx = train_idx.clone();
    }

    let mut params = net.init_params(derive_seed(config.seed, 2));
    let mut velocity = vec![0.0; params.len()];
    let mut best = params.clone();
    let mut history = TrainHistory {
        epoch_accuracy: Vec::with_capacity(config.epochs),
        epoch_loss: Vec::with_capacity(config.epochs),
        best_epoch: 0,
        best_accuracy: f64::NEG_INFINITY,
        validation_rows: val_idx.len(),
    };
    let mut order = train_idx;
    for epoch in 0..config.epochs {
        let epoch_seed = derive_seed(config.seed, 1000 + epoch as u64);
        order.shuffle(&mut rng(epoch_seed));
        let mut epoch_loss = 0.0;
        for (b, batch) in order.chunks(config.batch_size).enumerate() {
            let base = b * config.batch_size;
            let partials: Vec<(Vec<f64>, f64)> = batch
                .par_chunks(GRAD_CHUNK)
                .enumerate()
                .map(|(c, chunk)| {
                    let mut g = vec![0.0; params.len()];
                    let mut loss = 0.0;
                    for (k, &i) in chunk.iter().enumerate() {
                        let pos = (base + c * GRAD_CHUNK + k) as u64;
                        let mode = DropoutMode::Seeded(derive_seed(epoch_seed, pos));
                        loss += net.loss_grad(&params, &xs[i], labels[i], mode, &mut g);
                    }
                    (g, loss)
                })
                .collect();
            let mut grad = vec![0.0; params.len()];
            let mut loss = 0.0;
            for (g, l) in partials {
                grad.iter_mut().zip(&g).for_each(|(a, b)| *a += b);
                loss += l;
            }
            if !loss.is_finite() || grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::Training(format!(
                    "loss became {loss} in epoch {} batch {}; the learning rate may be too high",
                    epoch + 1,
                    b + 1
                )));
            }
            epoch_loss += loss;
            let scale = 1.0 / batch.len() as f64;
            for ((p, v), g) in params.iter_mut().zip(velocity.iter_mut()).zip(&grad) {
                *v = config.momentum * *v - config.learning_rate * g * scale;
                *p += *v;
            }
        }
        let acc = accuracy(net, &params, xs, labels, &val_idx);
        log::debug!("epoch {} loss {:.5} val acc {:.4}", epoch + 1, epoch_loss / order.len() as f64, acc);
        history.epoch_accuracy.push(acc);
        history.epoch_loss.push(epoch_loss / order.len() as f64);
        if acc > history.best_accuracy {
            history.best_accuracy = acc;
            history.best_epoch = epoch + 1;
            best.copy_from_slice(&params);
        }
    }
    Ok((best, history))
}
