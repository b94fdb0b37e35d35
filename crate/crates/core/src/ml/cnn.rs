//! 2D CNN over packet grids:
//! conv(3×3, ReLU) → maxpool(2×2) → conv(3×3, ReLU) → maxpool(2×2) →
//! flatten → dropout(0.5) → dense softmax.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::network::{he_init, rng, softmax_xent, DropoutMode, Network};
use super::softmax_in_place;
use crate::error::{Error, Result};
use crate::features::{GRID_COLS, GRID_ROWS};

pub const FILTERS: (usize, usize) = (8, 16);
pub const DROPOUT: f64 = 0.5;
const K: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CnnShape {
    pub height: usize,
    pub width: usize,
    pub filters1: usize,
    pub filters2: usize,
    pub classes: usize,
}

/// Spatial sizes after each layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub conv1: (usize, usize),
    pub pool1: (usize, usize),
    pub conv2: (usize, usize),
    pub pool2: (usize, usize),
    pub flat: usize,
}

impl CnnShape {
    pub fn grid(classes: usize) -> CnnShape {
        CnnShape { height: GRID_ROWS, width: GRID_COLS, filters1: FILTERS.0, filters2: FILTERS.1, classes }
    }

    pub fn dims(&self) -> Result<Dims> {
        let valid = |(h, w): (usize, usize)| -> Result<(usize, usize)> {
            if h < K || w < K {
                return Err(Error::InvalidInput(format!(
                    "{}x{} input too small for the layer stack",
                    self.height, self.width
                )));
            }
            Ok((h - K + 1, w - K + 1))
        };
        let pool = |(h, w): (usize, usize)| (h / 2, w / 2);
        let conv1 = valid((self.height, self.width))?;
        let pool1 = pool(conv1);
        let conv2 = valid(pool1)?;
        let pool2 = pool(conv2);
        let flat = self.filters2 * pool2.0 * pool2.1;
        if flat == 0 || self.filters1 == 0 || self.classes == 0 {
            return Err(Error::InvalidInput("degenerate network shape".into()));
        }
        Ok(Dims { conv1, pool1, conv2, pool2, flat })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cnn {
    shape: CnnShape,
}

struct Offsets {
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
    wd: usize,
    bd: usize,
    end: usize,
}

struct Trace {
    a1: Vec<f64>,
    p1: Vec<f64>,
    i1: Vec<usize>,
    a2: Vec<f64>,
    i2: Vec<usize>,
    flat: Vec<f64>,
    logits: Vec<f64>,
}

impl Cnn {
    pub fn new(shape: CnnShape) -> Result<Cnn> {
        shape.dims()?;
        Ok(Cnn { shape })
    }

    /// Network for the standard 10×250 packet grid.
    pub fn for_grids(classes: usize) -> Result<Cnn> {
        let cnn = Cnn::new(CnnShape::grid(classes))?;
        let flat = cnn.dims().flat;
        if flat != 976 {
            return Err(Error::InvalidInput(format!("grid network flattens to {flat}, expected 976")));
        }
        Ok(cnn)
    }

    pub fn shape(&self) -> CnnShape {
        self.shape
    }

    pub fn dims(&self) -> Dims {
        self.shape.dims().expect("shape validated at construction")
    }

    fn offsets(&self) -> Offsets {
        let s = &self.shape;
        let d = self.dims();
        let w1 = 0;
        let b1 = w1 + s.filters1 * K * K;
        let w2 = b1 + s.filters1;
        let b2 = w2 + s.filters2 * s.filters1 * K * K;
        let wd = b2 + s.filters2;
        let bd = wd + s.classes * d.flat;
        Offsets { w1, b1, w2, b2, wd, bd, end: bd + s.classes }
    }

    fn forward(&self, params: &[f64], x: &[f64], mask: Option<&[f64]>) -> Trace {
        let s = &self.shape;
        let d = self.dims();
        let o = self.offsets();
        let mut a1 = conv_valid(x, 1, (s.height, s.width), &params[o.w1..o.b1], &params[o.b1..o.w2], s.filters1);
        relu(&mut a1);
        let (p1, i1) = maxpool(&a1, s.filters1, d.conv1);
        let mut a2 = conv_valid(&p1, s.filters1, d.pool1, &params[o.w2..o.b2], &params[o.b2..o.wd], s.filters2);
        relu(&mut a2);
        let (mut flat, i2) = maxpool(&a2, s.filters2, d.conv2);
        if let Some(m) = mask {
            flat.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
        }
        let mut logits = params[o.bd..o.end].to_vec();
        for (k, l) in logits.iter_mut().enumerate() {
            let row = &params[o.wd + k * d.flat..o.wd + (k + 1) * d.flat];
            *l += dot(row, &flat);
        }
        Trace { a1, p1, i1, a2, i2, flat, logits }
    }

    pub fn dropout_mask(&self, seed: u64) -> Vec<f64> {
        let mut r = rng(seed);
        let keep = 1.0 / (1.0 - DROPOUT);
        (0..self.dims().flat).map(|_| if r.random_bool(DROPOUT) { 0.0 } else { keep }).collect()
    }
}

impl Network for Cnn {
    fn input_len(&self) -> usize {
        self.shape.height * self.shape.width
    }

    fn class_count(&self) -> usize {
        self.shape.classes
    }

    fn param_count(&self) -> usize {
        self.offsets().end
    }

    fn init_params(&self, seed: u64) -> Vec<f64> {
        let s = &self.shape;
        let o = self.offsets();
        let mut r = rng(seed);
        let mut p = vec![0.0; o.end];
        he_init(&mut p[o.w1..o.b1], K * K, &mut r);
        he_init(&mut p[o.w2..o.b2], s.filters1 * K * K, &mut r);
        he_init(&mut p[o.wd..o.bd], self.dims().flat, &mut r);
        p
    }

    fn probs(&self, params: &[f64], x: &[f64]) -> Vec<f64> {
        let mut l = self.forward(params, x, None).logits;
        softmax_in_place(&mut l);
        l
    }

    fn loss_grad(&self, params: &[f64], x: &[f64], label: usize, dropout: DropoutMode<'_>, grad: &mut [f64]) -> f64 {
        let s = &self.shape;
        let d = self.dims();
        let o = self.offsets();
        let owned;
        let mask = match dropout {
            DropoutMode::Off => None,
            DropoutMode::Mask(m) => Some(m),
            DropoutMode::Seeded(seed) => {
                owned = self.dropout_mask(seed);
                Some(&owned[..])
            }
        };
        let mut t = self.forward(params, x, mask);
        let loss = softmax_xent(&mut t.logits, label);
        let dl = &t.logits;

        // Dense layer.
        let mut dflat = vec![0.0; d.flat];
        for (k, &g) in dl.iter().enumerate() {
            grad[o.bd + k] += g;
            axpy(&mut grad[o.wd + k * d.flat..o.wd + (k + 1) * d.flat], g, &t.flat);
            axpy(&mut dflat, g, &params[o.wd + k * d.flat..o.wd + (k + 1) * d.flat]);
        }
        if let Some(m) = mask {
            dflat.iter_mut().zip(m).for_each(|(v, m)| *v *= m);
        }

        // Second block.
        let mut da2 = vec![0.0; t.a2.len()];
        for (g, &i) in dflat.iter().zip(&t.i2) {
            da2[i] += g;
        }
        relu_backward(&mut da2, &t.a2);
        let mut dp1 = vec![0.0; t.p1.len()];
        conv_backward(
            &t.p1,
            s.filters1,
            d.pool1,
            &params[o.w2..o.b2],
            &da2,
            s.filters2,
            &mut grad[o.w2..o.wd],
            Some(&mut dp1),
        );

        // First block.
        let mut da1 = vec![0.0; t.a1.len()];
        for (g, &i) in dp1.iter().zip(&t.i1) {
            da1[i] += g;
        }
        relu_backward(&mut da1, &t.a1);
        conv_backward(x, 1, (s.height, s.width), &params[o.w1..o.b1], &da1, s.filters1, &mut grad[o.w1..o.w2], None);
        loss
    }
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(out: &mut [f64], a: f64, x: &[f64]) {
    out.iter_mut().zip(x).for_each(|(o, x)| *o += a * x);
}

fn relu(v: &mut [f64]) {
    v.iter_mut().filter(|x| **x < 0.0).for_each(|x| *x = 0.0);
}

fn relu_backward(grad: &mut [f64], act: &[f64]) {
    grad.iter_mut().zip(act).for_each(|(g, a)| {
        if *a <= 0.0 {
            *g = 0.0
        }
    });
}

/// Valid 3×3 convolution, channels-first. Weights are `[cout][cin][3][3]`.
pub(crate) fn conv_valid(
    input: &[f64],
    cin: usize,
    (h, w): (usize, usize),
    weights: &[f64],
    bias: &[f64],
    cout: usize,
) -> Vec<f64> {
    let (oh, ow) = (h - K + 1, w - K + 1);
    let mut out = vec![0.0; cout * oh * ow];
    for f in 0..cout {
        let of = &mut out[f * oh * ow..(f + 1) * oh * ow];
        of.iter_mut().for_each(|v| *v = bias[f]);
        for c in 0..cin {
            let ic = &input[c * h * w..(c + 1) * h * w];
            for ki in 0..K {
                for kj in 0..K {
                    let wv = weights[((f * cin + c) * K + ki) * K + kj];
                    for i in 0..oh {
                        let src = &ic[(i + ki) * w + kj..(i + ki) * w + kj + ow];
                        axpy(&mut of[i * ow..(i + 1) * ow], wv, src);
                    }
                }
            }
        }
    }
    out
}

/// Accumulates weight and bias gradients (`grad` = weights then biases) and
/// optionally the input gradient.
#[allow(clippy::too_many_arguments)]
pub(crate) fn conv_backward(
    input: &[f64],
    cin: usize,
    (h, w): (usize, usize),
    weights: &[f64],
    dout: &[f64],
    cout: usize,
    grad: &mut [f64],
    mut dinput: Option<&mut [f64]>,
) {
    let (oh, ow) = (h - K + 1, w - K + 1);
    let nw = cout * cin * K * K;
    for f in 0..cout {
        let df = &dout[f * oh * ow..(f + 1) * oh * ow];
        grad[nw + f] += df.iter().sum::<f64>();
        for c in 0..cin {
            let ic = &input[c * h * w..(c + 1) * h * w];
            for ki in 0..K {
                for kj in 0..K {
                    let widx = ((f * cin + c) * K + ki) * K + kj;
                    let mut acc = 0.0;
                    for i in 0..oh {
                        let src = &ic[(i + ki) * w + kj..(i + ki) * w + kj + ow];
                        acc += dot(&df[i * ow..(i + 1) * ow], src);
                    }
                    grad[widx] += acc;
                    if let Some(din) = dinput.as_deref_mut() {
                        let wv = weights[widx];
                        let dc = &mut din[c * h * w..(c + 1) * h * w];
                        for i in 0..oh {
                            let dst = &mut dc[(i + ki) * w + kj..(i + ki) * w + kj + ow];
                            axpy(dst, wv, &df[i * ow..(i + 1) * ow]);
                        }
                    }
                }
            }
        }
    }
}

/// 2×2 max pooling with stride 2 (trailing odd row/column dropped).
/// Returns pooled values and the flat input index of each maximum.
pub(crate) fn maxpool(input: &[f64], channels: usize, (h, w): (usize, usize)) -> (Vec<f64>, Vec<usize>) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(channels * ph * pw);
    let mut idx = Vec::with_capacity(channels * ph * pw);
    for c in 0..channels {
        for i in 0..ph {
            for j in 0..pw {
                let base = c * h * w;
                let cands = [
                    base + 2 * i * w + 2 * j,
                    base + 2 * i * w + 2 * j + 1,
                    base + (2 * i + 1) * w + 2 * j,
                    base + (2 * i + 1) * w + 2 * j + 1,
                ];
                let mut best = cands[0];
                for &k in &cands[1..] {
                    if input[k] > input[best] {
                        best = k;
                    }
                }
                out.push(input[best]);
                idx.push(best);
            }
        }
    }
    (out, idx)
}
