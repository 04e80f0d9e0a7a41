//! Pointwise layers: ReLU, two-class softmax, cross-entropy loss and
//! inverted dropout.

use rand::Rng;

use super::tensor::{Scalar, Tensor};
use super::NumericsError;
use crate::seed;
use crate::types::LabelMap;

/// Probabilities are clamped here before the log in the loss.
pub const PROB_CLAMP: f64 = 1e-12;

/// Channel index of the background class in two-class tensors.
pub const CHANNEL_BACKGROUND: usize = 0;
/// Channel index of the positive (seagrass) class in two-class tensors.
pub const CHANNEL_POSITIVE: usize = 1;

/// Elementwise `max(0, x)`.
pub fn relu<T: Scalar>(input: &Tensor<T>) -> Tensor<T> {
    input.map(|v| if v > T::zero() { v } else { T::zero() })
}

/// Masks the upstream gradient wherever the forward input was `<= 0`.
pub fn relu_backward<T: Scalar>(
    input: &Tensor<T>,
    grad_out: &Tensor<T>,
) -> Result<Tensor<T>, NumericsError> {
    if input.shape() != grad_out.shape() {
        return Err(NumericsError::ShapeMismatch {
            context: "relu_backward",
            dimension: "upstream gradient shape",
            expected: format!("{:?}", input.shape()),
            got: format!("{:?}", grad_out.shape()),
        });
    }
    let mut out = grad_out.clone();
    for (g, &x) in out.data_mut().iter_mut().zip(input.data()) {
        if x <= T::zero() {
            *g = T::zero();
        }
    }
    Ok(out)
}

/// Numerically stable per-pixel softmax over a two-channel tensor.
///
/// Returns a tensor of the same shape; channel [`CHANNEL_POSITIVE`] holds
/// the positive-class probability.
pub fn softmax_2class<T: Scalar>(logits: &Tensor<T>) -> Result<Tensor<T>, NumericsError> {
    let [b, c, h, w] = logits.shape();
    if c != 2 {
        return Err(NumericsError::BadDimension {
            context: "softmax_2class",
            dimension: "channels",
            detail: format!("expected exactly 2, got {c}"),
        });
    }
    let mut out = Tensor::zeros([b, c, h, w]);
    for bi in 0..b {
        for y in 0..h {
            for x in 0..w {
                let z0 = logits.at(bi, 0, y, x);
                let z1 = logits.at(bi, 1, y, x);
                let m = if z0 > z1 { z0 } else { z1 };
                let e0 = (z0 - m).exp();
                let e1 = (z1 - m).exp();
                let sum = e0 + e1;
                *out.at_mut(bi, 0, y, x) = e0 / sum;
                *out.at_mut(bi, 1, y, x) = e1 / sum;
            }
        }
    }
    Ok(out)
}

/// Mean pixel-wise cross-entropy of two-class probabilities against a
/// binary label map.
///
/// Returns the scalar loss and the gradient **with respect to the logits**
/// that produced `probs` via [`softmax_2class`]: `(p - onehot) / N` per
/// pixel. Probabilities below [`PROB_CLAMP`] are clamped before the log.
pub fn cross_entropy<T: Scalar>(
    probs: &Tensor<T>,
    labels: &LabelMap,
) -> Result<(T, Tensor<T>), NumericsError> {
    let [b, c, h, w] = probs.shape();
    if c != 2 {
        return Err(NumericsError::BadDimension {
            context: "cross_entropy",
            dimension: "channels",
            detail: format!("expected exactly 2, got {c}"),
        });
    }
    if b != 1 {
        return Err(NumericsError::BadDimension {
            context: "cross_entropy",
            dimension: "batch",
            detail: format!("expected 1, got {b}"),
        });
    }
    if labels.height() != h || labels.width() != w {
        return Err(NumericsError::ShapeMismatch {
            context: "cross_entropy",
            dimension: "label extents",
            expected: format!("{h}x{w}"),
            got: format!("{}x{}", labels.height(), labels.width()),
        });
    }

    let n = (h * w) as f64;
    let inv_n = T::from_f64(1.0 / n);
    let clamp = T::from_f64(PROB_CLAMP);
    let mut loss = 0.0f64;
    let mut grad = Tensor::zeros([1, 2, h, w]);
    for y in 0..h {
        for x in 0..w {
            let label = labels.get(y, x) as usize;
            let p_true = probs.at(0, label, y, x);
            let p_true = if p_true < clamp { clamp } else { p_true };
            loss -= p_true.to_f64().ln();
            for ch in 0..2 {
                let p = probs.at(0, ch, y, x);
                let onehot = if ch == label { T::one() } else { T::zero() };
                *grad.at_mut(0, ch, y, x) = (p - onehot) * inv_n;
            }
        }
    }
    Ok((T::from_f64(loss / n), grad))
}

/// Mask produced by [`dropout`]; reapplied verbatim on the backward pass.
#[derive(Clone)]
pub struct DropoutMask {
    keep: Vec<bool>,
    scale: f64,
}

impl DropoutMask {
    /// Fraction of elements kept.
    pub fn keep_fraction(&self) -> f64 {
        if self.keep.is_empty() {
            return 1.0;
        }
        self.keep.iter().filter(|&&k| k).count() as f64 / self.keep.len() as f64
    }
}

/// Inverted dropout: in train mode each element is zeroed with probability
/// `p` and survivors are scaled by `1/(1-p)`, so inference is the identity.
pub fn dropout<T: Scalar>(
    input: &Tensor<T>,
    p: f64,
    train_mode: bool,
    rng_seed: u64,
) -> Result<(Tensor<T>, DropoutMask), NumericsError> {
    if !(0.0..1.0).contains(&p) {
        return Err(NumericsError::InvalidArgument {
            context: "dropout",
            detail: format!("p must satisfy 0 <= p < 1, got {p}"),
        });
    }
    if !train_mode || p == 0.0 {
        return Ok((
            input.clone(),
            DropoutMask {
                keep: vec![true; input.len()],
                scale: 1.0,
            },
        ));
    }
    let scale = 1.0 / (1.0 - p);
    let scale_t = T::from_f64(scale);
    let mut rng = seed::rng(rng_seed);
    let mut keep = vec![true; input.len()];
    let mut out = input.clone();
    for (v, k) in out.data_mut().iter_mut().zip(keep.iter_mut()) {
        if rng.gen::<f64>() < p {
            *k = false;
            *v = T::zero();
        } else {
            *v = *v * scale_t;
        }
    }
    Ok((out, DropoutMask { keep, scale }))
}

/// Applies the forward mask and scale to the upstream gradient.
pub fn dropout_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    mask: &DropoutMask,
) -> Result<Tensor<T>, NumericsError> {
    if grad_out.len() != mask.keep.len() {
        return Err(NumericsError::ShapeMismatch {
            context: "dropout_backward",
            dimension: "mask length",
            expected: format!("{}", grad_out.len()),
            got: format!("{}", mask.keep.len()),
        });
    }
    let scale = T::from_f64(mask.scale);
    let mut out = grad_out.clone();
    for (g, &k) in out.data_mut().iter_mut().zip(&mask.keep) {
        *g = if k { *g * scale } else { T::zero() };
    }
    Ok(out)
}
