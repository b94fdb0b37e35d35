//! Interface between the network architectures and the shared trainer.
//! Parameters live in one flat vector so the trainer can apply updates
//! without knowing the layer structure.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

#[derive(Debug, Clone, Copy)]
pub enum DropoutMode<'a> {
    Off,
    /// Draw a fresh mask from this seed.
    Seeded(u64),
    /// Use this keep-scaled mask (entries 0 or 1/(1-p)).
    Mask(&'a [f64]),
}

pub trait Network: Sync {
    fn input_len(&self) -> usize;
    fn class_count(&self) -> usize;
    fn param_count(&self) -> usize;
    fn init_params(&self, seed: u64) -> Vec<f64>;
    /// Class distribution at inference time (no dropout).
    fn probs(&self, params: &[f64], x: &[f64]) -> Vec<f64>;
    /// Cross-entropy loss of one sample; adds its gradient into `grad`.
    fn loss_grad(&self, params: &[f64], x: &[f64], label: usize, dropout: DropoutMode<'_>, grad: &mut [f64]) -> f64;

    fn loss(&self, params: &[f64], x: &[f64], label: usize, dropout: DropoutMode<'_>) -> f64 {
        let mut g = vec![0.0; self.param_count()];
        self.loss_grad(params, x, label, dropout, &mut g)
    }
}

/// He-normal weights for a layer with `fan_in` inputs.
pub(crate) fn he_init(out: &mut [f64], fan_in: usize, rng: &mut ChaCha8Rng) {
    let n = Normal::new(0.0, (2.0 / fan_in as f64).sqrt()).expect("positive std");
    for w in out {
        *w = n.sample(rng);
    }
}

pub(crate) fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Softmax cross-entropy on `logits` (overwritten with probabilities);
/// returns the loss and leaves ∂loss/∂logits in `logits`.
pub(crate) fn softmax_xent(logits: &mut [f64], label: usize) -> f64 {
    super::softmax_in_place(logits);
    let loss = -logits[label].max(f64::MIN_POSITIVE).ln();
    logits[label] -= 1.0;
    loss
}
