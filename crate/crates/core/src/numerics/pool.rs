//! 2x2 max pooling with stride 2.
//!
//! The forward pass records, per output element, the flat input offset of
//! the winning element; ties go to the first occurrence in row-major window
//! scan order, so the backward routing is deterministic.

use super::tensor::{Scalar, Tensor};
use super::NumericsError;

/// Pooling window and stride; the architecture only ever halves extents.
pub const POOL_WINDOW: usize = 2;

/// Forward output plus the argmax routing map for the backward pass.
#[derive(Debug)]
pub struct PoolResult<T: Scalar> {
    pub output: Tensor<T>,
    /// Flat offset into the input tensor of each output element's winner.
    pub argmax: Vec<usize>,
}

/// 2x2/stride-2 max pool. Both spatial extents must be even.
pub fn maxpool2d<T: Scalar>(input: &Tensor<T>) -> Result<PoolResult<T>, NumericsError> {
    let [b, c, h, w] = input.shape();
    if h % 2 != 0 {
        return Err(NumericsError::BadDimension {
            context: "maxpool2d",
            dimension: "height",
            detail: format!("{h} is not divisible by 2"),
        });
    }
    if w % 2 != 0 {
        return Err(NumericsError::BadDimension {
            context: "maxpool2d",
            dimension: "width",
            detail: format!("{w} is not divisible by 2"),
        });
    }

    let (oh, ow) = (h / 2, w / 2);
    let mut output = Tensor::zeros([b, c, oh, ow]);
    let mut argmax = vec![0usize; b * c * oh * ow];
    let mut out_idx = 0;
    for bi in 0..b {
        for ci in 0..c {
            for oy in 0..oh {
                let top = input.row(bi, ci, 2 * oy);
                let bot = input.row(bi, ci, 2 * oy + 1);
                let top_off = input.offset(bi, ci, 2 * oy, 0);
                let bot_off = input.offset(bi, ci, 2 * oy + 1, 0);
                let out_row = output.row_mut(bi, ci, oy);
                for (ox, out) in out_row.iter_mut().enumerate() {
                    let x0 = 2 * ox;
                    // Row-major scan; strict > keeps the first occurrence on ties.
                    let mut best = top[x0];
                    let mut best_off = top_off + x0;
                    if top[x0 + 1] > best {
                        best = top[x0 + 1];
                        best_off = top_off + x0 + 1;
                    }
                    if bot[x0] > best {
                        best = bot[x0];
                        best_off = bot_off + x0;
                    }
                    if bot[x0 + 1] > best {
                        best = bot[x0 + 1];
                        best_off = bot_off + x0 + 1;
                    }
                    *out = best;
                    argmax[out_idx] = best_off;
                    out_idx += 1;
                }
            }
        }
    }
    Ok(PoolResult { output, argmax })
}

/// Routes the upstream gradient back to each window's winning position.
pub fn maxpool2d_backward<T: Scalar>(
    grad_out: &Tensor<T>,
    argmax: &[usize],
    input_shape: [usize; 4],
) -> Result<Tensor<T>, NumericsError> {
    if grad_out.len() != argmax.len() {
        return Err(NumericsError::ShapeMismatch {
            context: "maxpool2d_backward",
            dimension: "argmax length",
            expected: format!("{}", grad_out.len()),
            got: format!("{}", argmax.len()),
        });
    }
    let mut grad_input = Tensor::zeros(input_shape);
    let data = grad_input.data_mut();
    for (&off, &g) in argmax.iter().zip(grad_out.data()) {
        data[off] = data[off] + g;
    }
    Ok(grad_input)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_window_takes_max() {
        let input = Tensor::<f32>::from_vec([1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let r = maxpool2d(&input).unwrap();
        assert_eq!(r.output.shape(), [1, 1, 1, 1]);
        assert_eq!(r.output.data()[0], 4.0);
        assert_eq!(r.argmax, vec![3]);
    }

    #[test]
    fn constant_input_routes_to_top_left() {
        let input = Tensor::<f32>::filled([1, 1, 4, 4], 7.0);
        let r = maxpool2d(&input).unwrap();
        assert!(r.output.data().iter().all(|&v| v == 7.0));
        // Winners are the top-left of each window.
        let expected: Vec<usize> = vec![0, 2, 8, 10];
        assert_eq!(r.argmax, expected);

        let grad_out = Tensor::<f32>::filled([1, 1, 2, 2], 1.0);
        let back = maxpool2d_backward(&grad_out, &r.argmax, [1, 1, 4, 4]).unwrap();
        for off in expected {
            assert_eq!(back.data()[off], 1.0);
        }
        assert_eq!(back.data().iter().filter(|&&v| v != 0.0).count(), 4);
    }

    #[test]
    fn odd_extent_rejected() {
        let input = Tensor::<f32>::zeros([1, 1, 3, 4]);
        let err = maxpool2d(&input).unwrap_err();
        assert!(err.to_string().contains("height"));
    }

    #[test]
    fn matches_brute_force_windows() {
        use crate::seed::rng;
        use rand::Rng;
        let mut r = rng(5);
        let input = Tensor::<f64>::from_vec(
            [1, 1, 6, 6],
            (0..36).map(|_| r.gen_range(-1.0..1.0)).collect(),
        )
        .unwrap();
        let pooled = maxpool2d(&input).unwrap();
        for oy in 0..3 {
            for ox in 0..3 {
                let window = [
                    input.at(0, 0, 2 * oy, 2 * ox),
                    input.at(0, 0, 2 * oy, 2 * ox + 1),
                    input.at(0, 0, 2 * oy + 1, 2 * ox),
                    input.at(0, 0, 2 * oy + 1, 2 * ox + 1),
                ];
                let max = window.iter().cloned().fold(f64::MIN, f64::max);
                assert_eq!(pooled.output.at(0, 0, oy, ox), max);
            }
        }
    }
}
