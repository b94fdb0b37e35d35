//! Fully connected network: input → 128 ReLU → 64 ReLU → softmax.

use serde::{Deserialize, Serialize};

use super::network::{he_init, rng, softmax_xent, DropoutMode, Network};
use super::softmax_in_place;

pub const HIDDEN: [usize; 2] = [128, 64];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mlp {
    /// Layer widths from input to output.
    sizes: Vec<usize>,
}

impl Mlp {
    pub fn new(input: usize, class_count: usize) -> Mlp {
        Mlp::with_hidden(input, &HIDDEN, class_count)
    }

    pub fn with_hidden(input: usize, hidden: &[usize], class_count: usize) -> Mlp {
        let mut sizes = vec![input];
        sizes.extend_from_slice(hidden);
        sizes.push(class_count);
        Mlp { sizes }
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    /// (weight offset, bias offset) of layer `l`.
    fn offsets(&self) -> Vec<(usize, usize)> {
        let mut off = 0;
        self.sizes
            .windows(2)
            .map(|w| {
                let wo = off;
                off += w[0] * w[1];
                let bo = off;
                off += w[1];
                (wo, bo)
            })
            .collect()
    }

    /// Pre-activations of every layer; hidden layers are ReLU'd in place in
    /// the returned activations.
    fn forward(&self, params: &[f64], x: &[f64]) -> Vec<Vec<f64>> {
        let offs = self.offsets();
        let layers = offs.len();
        let mut acts = vec![x.to_vec()];
        for (l, &(wo, bo)) in offs.iter().enumerate() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            let mut out = params[bo..bo + n_out].to_vec();
            for (o, v) in out.iter_mut().enumerate() {
                let row = &params[wo + o * n_in..wo + (o + 1) * n_in];
                *v += row.iter().zip(input).map(|(a, b)| a * b).sum::<f64>();
            }
            if l + 1 < layers {
                // Written so NaN propagates instead of being clipped.
                out.iter_mut().filter(|v| **v < 0.0).for_each(|v| *v = 0.0);
            }
            acts.push(out);
        }
        acts
    }
}

impl Network for Mlp {
    fn input_len(&self) -> usize {
        self.sizes[0]
    }

    fn class_count(&self) -> usize {
        *self.sizes.last().unwrap()
    }

    fn param_count(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(seed);
        let mut p = vec![0.0; self.param_count()];
        for (l, (wo, bo)) in self.offsets().into_iter().enumerate() {
            he_init(&mut p[wo..bo], self.sizes[l], &mut r);
        }
        p
    }

    fn probs(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut out = self.forward(params, x).pop().unwrap();
        softmax_in_place(&mut out);
        out
    }

    fn loss_grad(&self, params: &[f64], x: &[f64], label: usize, _dropout: DropoutMode<'_>, grad: &mut [f64]) -> f64 {
        let offs = self.offsets();
        let mut acts = self.forward(params, x);
        let mut delta = acts.pop().unwrap();
        let loss = softmax_xent(&mut delta, label);
        for l in (0..offs.len()).rev() {
            let (wo, bo) = offs[l];
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let input = &acts[l];
            for o in 0..n_out {
                let d = delta[o];
                grad[bo + o] += d;
                if d != 0.0 {
                    let g = &mut grad[wo + o * n_in..wo + (o + 1) * n_in];
                    g.iter_mut().zip(input).for_each(|(g, a)| *g += d * a);
                }
            }
            if l == 0 {
                break;
            }
            let mut prev = vec![0.0; n_in];
            for (o, &d) in delta.iter().enumerate() {
                if d != 0.0 {
                    let row = &params[wo + o * n_in..wo + (o + 1) * n_in];
                    prev.iter_mut().zip(row).for_each(|(p, w)| *p += d * w);
                }
            }
            // ReLU derivative: the stored activation is zero where clipped.
            prev.iter_mut().zip(input).for_each(|(p, a)| {
                if *a <= 0.0 {
                    *p = 0.0
                }
            });
            delta = prev;
        }
        loss
    }
}
