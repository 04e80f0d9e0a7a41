//! 2-D convolution and its adjoint (transposed convolution), forward and
//! backward.
//!
//! Kernels use the convolution layout `(out_channels, in_channels, kh, kw)`.
//! [`transposed_conv2d`] is the exact adjoint of [`conv2d`] at matched
//! geometry: `<conv2d(x), y> == <x, transposed_conv2d(y)>` whenever the
//! stride is shared and `cropping == padding`. The transposed direction
//! therefore consumes `out_channels` maps and produces `in_channels` maps.

use super::tensor::{Scalar, Tensor};
use super::NumericsError;

/// Gradients of a scalar loss through [`conv2d`].
pub struct Conv2dGrads<T> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
    pub bias: Vec<T>,
}

/// Gradients of a scalar loss through [`transposed_conv2d`].
pub struct TransposedConv2dGrads<T> {
    pub input: Tensor<T>,
    pub kernel: Tensor<T>,
}

fn check_conv_geometry<T: Scalar>(
    context: &'static str,
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    padding: usize,
) -> Result<(usize, usize), NumericsError> {
    let [_, in_c, in_h, in_w] = input.shape();
    let [_, k_in, k_h, k_w] = kernel.shape();
    if stride == 0 {
        return Err(NumericsError::InvalidArgument {
            context,
            detail: "stride must be positive".into(),
        });
    }
    if k_in != in_c {
        return Err(NumericsError::ShapeMismatch {
            context,
            dimension: "kernel input channels",
            expected: format!("{in_c}"),
            got: format!("{k_in}"),
        });
    }
    let out_h = conv_extent(context, "height", in_h, k_h, stride, padding)?;
    let out_w = conv_extent(context, "width", in_w, k_w, stride, padding)?;
    Ok((out_h, out_w))
}

fn conv_extent(
    context: &'static str,
    dimension: &'static str,
    extent: usize,
    k: usize,
    stride: usize,
    padding: usize,
) -> Result<usize, NumericsError> {
    let padded = extent + 2 * padding;
    if padded < k || (padded - k) % stride != 0 {
        return Err(NumericsError::BadDimension {
            context,
            dimension,
            detail: format!(
                "({extent} + 2*{padding} - {k}) / {stride} + 1 is not a positive integer"
            ),
        });
    }
    Ok((padded - k) / stride + 1)
}

fn pad<T: Scalar>(input: &Tensor<T>, padding: usize) -> Tensor<T> {
    if padding == 0 {
        return input.clone();
    }
    let [b, c, h, w] = input.shape();
    let mut out = Tensor::zeros([b, c, h + 2 * padding, w + 2 * padding]);
    for bi in 0..b {
        for ci in 0..c {
            for y in 0..h {
                let src = input.row(bi, ci, y);
                let dst = out.row_mut(bi, ci, y + padding);
                dst[padding..padding + w].copy_from_slice(src);
            }
        }
    }
    out
}

fn crop<T: Scalar>(input: &Tensor<T>, margin: usize) -> Tensor<T> {
    if margin == 0 {
        return input.clone();
    }
    let [b, c, h, w] = input.shape();
    let (oh, ow) = (h - 2 * margin, w - 2 * margin);
    let mut out = Tensor::zeros([b, c, oh, ow]);
    for bi in 0..b {
        for ci in 0..c {
            for y in 0..oh {
                let src = &input.row(bi, ci, y + margin)[margin..margin + ow];
                out.row_mut(bi, ci, y).copy_from_slice(src);
            }
        }
    }
    out
}

/// Cross-correlation of `input` with `kernel` plus a per-output-channel bias.
///
/// `out[b,o,y,x] = bias[o] + sum_{i,ky,kx} in[b,i,y*s+ky-p, x*s+kx-p] * k[o,i,ky,kx]`
pub fn conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    bias: &[T],
    stride: usize,
    padding: usize,
) -> Result<Tensor<T>, NumericsError> {
    let (out_h, out_w) = check_conv_geometry("conv2d", input, kernel, stride, padding)?;
    let [b, in_c, _, _] = input.shape();
    let [out_c, _, k_h, k_w] = kernel.shape();
    if bias.len() != out_c {
        return Err(NumericsError::ShapeMismatch {
            context: "conv2d",
            dimension: "bias length",
            expected: format!("{out_c}"),
            got: format!("{}", bias.len()),
        });
    }

    let padded = pad(input, padding);
    let mut out = Tensor::zeros([b, out_c, out_h, out_w]);
    for bi in 0..b {
        for o in 0..out_c {
            for y in 0..out_h {
                out.row_mut(bi, o, y).fill(bias[o]);
            }
            for i in 0..in_c {
                for ky in 0..k_h {
                    for kx in 0..k_w {
                        let w = kernel.at(o, i, ky, kx);
                        for oy in 0..out_h {
                            let src = padded.row(bi, i, oy * stride + ky);
                            let dst = out.row_mut(bi, o, oy);
                            if stride == 1 {
                                for (d, &s) in dst.iter_mut().zip(&src[kx..kx + out_w]) {
                                    *d = *d + w * s;
                                }
                            } else {
                                for (ox, d) in dst.iter_mut().enumerate() {
                                    *d = *d + w * src[ox * stride + kx];
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// Exact analytic gradients of a scalar loss through [`conv2d`], given the
/// upstream gradient on the output.
pub fn conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    padding: usize,
    grad_out: &Tensor<T>,
) -> Result<Conv2dGrads<T>, NumericsError> {
    let (out_h, out_w) = check_conv_geometry("conv2d_backward", input, kernel, stride, padding)?;
    let [b, in_c, in_h, in_w] = input.shape();
    let [out_c, _, k_h, k_w] = kernel.shape();
    if grad_out.shape() != [b, out_c, out_h, out_w] {
        return Err(NumericsError::ShapeMismatch {
            context: "conv2d_backward",
            dimension: "upstream gradient shape",
            expected: format!("{:?}", [b, out_c, out_h, out_w]),
            got: format!("{:?}", grad_out.shape()),
        });
    }

    let padded = pad(input, padding);
    let mut grad_padded = Tensor::zeros(padded.shape());
    let mut grad_kernel = Tensor::zeros(kernel.shape());
    let mut grad_bias = vec![T::zero(); out_c];

    for bi in 0..b {
        for o in 0..out_c {
            let mut db = T::zero();
            for oy in 0..out_h {
                for &g in grad_out.row(bi, o, oy) {
                    db = db + g;
                }
            }
            grad_bias[o] = grad_bias[o] + db;

            for i in 0..in_c {
                for ky in 0..k_h {
                    for kx in 0..k_w {
                        let w = kernel.at(o, i, ky, kx);
                        let mut dw = T::zero();
                        for oy in 0..out_h {
                            let g_row = grad_out.row(bi, o, oy);
                            let src = padded.row(bi, i, oy * stride + ky);
                            if stride == 1 {
                                for (&g, &s) in g_row.iter().zip(&src[kx..kx + out_w]) {
                                    dw = dw + g * s;
                                }
                            } else {
                                for (ox, &g) in g_row.iter().enumerate() {
                                    dw = dw + g * src[ox * stride + kx];
                                }
                            }
                            let dst = grad_padded.row_mut(bi, i, oy * stride + ky);
                            if stride == 1 {
                                for (d, &g) in dst[kx..kx + out_w].iter_mut().zip(g_row) {
                                    *d = *d + w * g;
                                }
                            } else {
                                for (ox, &g) in g_row.iter().enumerate() {
                                    dst[ox * stride + kx] = dst[ox * stride + kx] + w * g;
                                }
                            }
                        }
                        let idx = grad_kernel.offset(o, i, ky, kx);
                        grad_kernel.data_mut()[idx] = grad_kernel.data()[idx] + dw;
                    }
                }
            }
        }
    }

    let grad_input = if padding == 0 {
        grad_padded
    } else {
        let full = crop(&grad_padded, padding);
        debug_assert_eq!(full.shape(), [b, in_c, in_h, in_w]);
        full
    };
    Ok(Conv2dGrads {
        input: grad_input,
        kernel: grad_kernel,
        bias: grad_bias,
    })
}

fn check_tconv_geometry<T: Scalar>(
    context: &'static str,
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    cropping: usize,
) -> Result<(usize, usize), NumericsError> {
    let [_, in_c, in_h, in_w] = input.shape();
    let [k_out, _, k_h, k_w] = kernel.shape();
    if stride == 0 {
        return Err(NumericsError::InvalidArgument {
            context,
            detail: "stride must be positive".into(),
        });
    }
    if k_out != in_c {
        return Err(NumericsError::ShapeMismatch {
            context,
            dimension: "kernel output channels (transposed input channels)",
            expected: format!("{in_c}"),
            got: format!("{k_out}"),
        });
    }
    let out_h = tconv_extent(context, "height", in_h, k_h, stride, cropping)?;
    let out_w = tconv_extent(context, "width", in_w, k_w, stride, cropping)?;
    Ok((out_h, out_w))
}

fn tconv_extent(
    context: &'static str,
    dimension: &'static str,
    extent: usize,
    k: usize,
    stride: usize,
    cropping: usize,
) -> Result<usize, NumericsError> {
    let full = stride * (extent - 1) + k;
    if full <= 2 * cropping {
        return Err(NumericsError::BadDimension {
            context,
            dimension,
            detail: format!("{stride}*({extent} - 1) + {k} - 2*{cropping} is not positive"),
        });
    }
    Ok(full - 2 * cropping)
}

/// Transposed convolution: the adjoint of [`conv2d`] with the same kernel,
/// stride, and `cropping == padding`. No bias term.
pub fn transposed_conv2d<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    cropping: usize,
) -> Result<Tensor<T>, NumericsError> {
    let (out_h, out_w) =
        check_tconv_geometry("transposed_conv2d", input, kernel, stride, cropping)?;
    let [b, in_c, in_h, in_w] = input.shape();
    let [_, out_c, k_h, k_w] = kernel.shape();

    // Scatter into the uncropped extent, then trim the margin.
    let ext_h = stride * (in_h - 1) + k_h;
    let ext_w = stride * (in_w - 1) + k_w;
    let mut ext = Tensor::zeros([b, out_c, ext_h, ext_w]);
    for bi in 0..b {
        for o in 0..in_c {
            for i in 0..out_c {
                for ky in 0..k_h {
                    for kx in 0..k_w {
                        let w = kernel.at(o, i, ky, kx);
                        for iy in 0..in_h {
                            let src = input.row(bi, o, iy);
                            let dst = ext.row_mut(bi, i, iy * stride + ky);
                            if stride == 1 {
                                for (d, &s) in dst[kx..kx + in_w].iter_mut().zip(src) {
                                    *d = *d + w * s;
                                }
                            } else {
                                for (ix, &s) in src.iter().enumerate() {
                                    dst[ix * stride + kx] = dst[ix * stride + kx] + w * s;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    let out = crop(&ext, cropping);
    debug_assert_eq!(out.shape(), [b, out_c, out_h, out_w]);
    Ok(out)
}

/// Exact analytic gradients of a scalar loss through [`transposed_conv2d`].
pub fn transposed_conv2d_backward<T: Scalar>(
    input: &Tensor<T>,
    kernel: &Tensor<T>,
    stride: usize,
    cropping: usize,
    grad_out: &Tensor<T>,
) -> Result<TransposedConv2dGrads<T>, NumericsError> {
    let (out_h, out_w) =
        check_tconv_geometry("transposed_conv2d_backward", input, kernel, stride, cropping)?;
    let [b, in_c, in_h, in_w] = input.shape();
    let [_, out_c, k_h, k_w] = kernel.shape();
    if grad_out.shape() != [b, out_c, out_h, out_w] {
        return Err(NumericsError::ShapeMismatch {
            context: "transposed_conv2d_backward",
            dimension: "upstream gradient shape",
            expected: format!("{:?}", [b, out_c, out_h, out_w]),
            got: format!("{:?}", grad_out.shape()),
        });
    }

    // Gradient w.r.t. the input is the forward gather (a conv2d of the
    // upstream gradient); gradient w.r.t. the kernel pairs input positions
    // with the padded upstream gradient.
    let g_padded = pad(grad_out, cropping);
    let mut grad_input = Tensor::zeros([b, in_c, in_h, in_w]);
    let mut grad_kernel = Tensor::zeros(kernel.shape());

    for bi in 0..b {
        for o in 0..in_c {
            for i in 0..out_c {
                for ky in 0..k_h {
                    for kx in 0..k_w {
                        let w = kernel.at(o, i, ky, kx);
                        let mut dw = T::zero();
                        for iy in 0..in_h {
                            let g_row = g_padded.row(bi, i, iy * stride + ky);
                            let src = input.row(bi, o, iy);
                            let dst = grad_input.row_mut(bi, o, iy);
                            if stride == 1 {
                                for ((d, &s), &g) in
                                    dst.iter_mut().zip(src).zip(&g_row[kx..kx + in_w])
                                {
                                    *d = *d + w * g;
                                    dw = dw + s * g;
                                }
                            } else {
                                for (ix, (d, &s)) in dst.iter_mut().zip(src).enumerate() {
                                    let g = g_row[ix * stride + kx];
                                    *d = *d + w * g;
                                    dw = dw + s * g;
                                }
                            }
                        }
                        let idx = grad_kernel.offset(o, i, ky, kx);
                        grad_kernel.data_mut()[idx] = grad_kernel.data()[idx] + dw;
                    }
                }
            }
        }
    }

    Ok(TransposedConv2dGrads {
        input: grad_input,
        kernel: grad_kernel,
    })
}
