//! The VGG16-FCN8 encoder/decoder at a configurable scale.
//!
//! The encoder is the VGG16 convolutional stack (five stages of 3x3
//! convolutions, each followed by a 2x2 max pool) with the two fully
//! connected layers convolutionalized into a 7x7 and a 1x1 convolution,
//! both wrapped in 0.5 dropout. The decoder scores the final feature map
//! and the third and fourth pool outputs with 1x1 convolutions, fuses them
//! through x2, x2 and x8 transposed convolutions, and finishes with a
//! two-class softmax. Channel widths scale down by an integer divisor so
//! the same architecture runs at desk scale.
//!
//! Images whose extents are not multiples of 32 are symmetrically
//! zero-padded up on ingestion and the output map is cropped back, so
//! pixel-wise evaluation happens at the original extents.

mod frozen;

pub use frozen::{frozen_size_bound, load_frozen, FrozenError};

use std::time::Instant;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{augment, AugmentationConfig};
use crate::numerics::{
    adam_update, bilinear_kernel, conv2d, conv2d_backward, cross_entropy, dropout,
    dropout_backward, maxpool2d, maxpool2d_backward, relu, relu_backward, softmax_2class,
    transposed_conv2d, transposed_conv2d_backward, truncated_gaussian_init, AdamConfig,
    DropoutMask, NumericsError, ParamState, Scalar, Tensor, CHANNEL_POSITIVE,
};
use crate::seed;
use crate::types::{Image, LabelMap, ProbabilityMap};

/// Number of convolutions per encoder stage (VGG16).
const STAGE_CONVS: [usize; 5] = [2, 2, 3, 3, 3];
/// Dropout probability on both convolutionalized FC stages.
const FC_DROPOUT: f64 = 0.5;
/// Spatial extent of the first convolutionalized FC kernel.
const FC6_KERNEL: usize = 7;
/// Low standard deviation for the class-score initializations.
const SCORE_INIT_STD: f64 = 0.01;

#[derive(Debug, Error)]
pub enum NetworkError {
    #[error("invalid network config: {0}")]
    InvalidConfig(String),
    #[error("image {got_h}x{got_w} does not pad up to the configured input {want_h}x{want_w}")]
    SizeMismatch {
        got_h: usize,
        got_w: usize,
        want_h: usize,
        want_w: usize,
    },
    #[error("label extents {got_h}x{got_w} do not match the forward image extents {want_h}x{want_w}")]
    LabelMismatch {
        got_h: usize,
        got_w: usize,
        want_h: usize,
        want_w: usize,
    },
    #[error("stale or mismatched forward cache: {0}")]
    StaleCache(String),
    #[error("training set is empty")]
    EmptyTrainSet,
    #[error("iteration count must be at least 1")]
    ZeroIterations,
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

/// Architecture hyperparameters.
///
/// `channel_widths` and `fc_channels` are full-scale reference widths;
/// every width is divided by `width_divisor` to reach the working scale.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NetworkConfig {
    pub input_height: usize,
    pub input_width: usize,
    pub channel_widths: [usize; 5],
    pub fc_channels: usize,
    pub num_classes: usize,
    pub width_divisor: usize,
}

impl NetworkConfig {
    /// Full-scale reference widths at divisor 1.
    pub fn reference(input_height: usize, input_width: usize) -> Self {
        Self::with_divisor(input_height, input_width, 1)
    }

    /// Reference widths scaled down by an integer divisor.
    pub fn with_divisor(input_height: usize, input_width: usize, width_divisor: usize) -> Self {
        Self {
            input_height,
            input_width,
            channel_widths: [64, 128, 256, 512, 512],
            fc_channels: 4096,
            num_classes: 2,
            width_divisor,
        }
    }

    pub fn validate(&self) -> Result<(), NetworkError> {
        if self.input_height == 0 || self.input_height % 32 != 0 {
            return Err(NetworkError::InvalidConfig(format!(
                "input height {} is not a positive multiple of 32",
                self.input_height
            )));
        }
        if self.input_width == 0 || self.input_width % 32 != 0 {
            return Err(NetworkError::InvalidConfig(format!(
                "input width {} is not a positive multiple of 32",
                self.input_width
            )));
        }
        if self.num_classes != 2 {
            return Err(NetworkError::InvalidConfig(format!(
                "num_classes is fixed at 2, got {}",
                self.num_classes
            )));
        }
        if self.width_divisor == 0 {
            return Err(NetworkError::InvalidConfig("width divisor must be positive".into()));
        }
        for (i, &w) in self.channel_widths.iter().enumerate() {
            if w / self.width_divisor == 0 {
                return Err(NetworkError::InvalidConfig(format!(
                    "stage {} width {w} / divisor {} is below 1",
                    i + 1,
                    self.width_divisor
                )));
            }
        }
        if self.fc_channels / self.width_divisor == 0 {
            return Err(NetworkError::InvalidConfig(format!(
                "fc width {} / divisor {} is below 1",
                self.fc_channels, self.width_divisor
            )));
        }
        Ok(())
    }

    /// Working encoder stage widths after division.
    pub fn scaled_widths(&self) -> [usize; 5] {
        let mut w = self.channel_widths;
        for v in &mut w {
            *v /= self.width_divisor;
        }
        w
    }

    /// Working width of the convolutionalized FC stages.
    pub fn scaled_fc(&self) -> usize {
        self.fc_channels / self.width_divisor
    }

    /// The closed-form halving schedule: `(height, width)` after each of
    /// the five pools.
    pub fn stage_extents(&self) -> Vec<(usize, usize)> {
        (1..=5)
            .map(|i| (self.input_height >> i, self.input_width >> i))
            .collect()
    }
}

/// Smallest multiple of 32 that holds `extent`.
pub fn padded_extent(extent: usize) -> usize {
    extent.div_ceil(32) * 32
}

/// A convolution's trainable kernel and bias.
#[derive(Debug, Clone)]
pub struct ConvBlock<T: Scalar> {
    pub weight: ParamState<T>,
    pub bias: ParamState<T>,
}

impl<T: Scalar> ConvBlock<T> {
    fn zeroed(out_c: usize, in_c: usize, k: usize) -> Self {
        Self {
            weight: ParamState::new(Tensor::zeros([out_c, in_c, k, k])),
            bias: ParamState::new(Tensor::zeros([out_c, 1, 1, 1])),
        }
    }
}

/// The assembled model: configuration plus every trainable parameter.
#[derive(Debug, Clone)]
pub struct Model<T: Scalar> {
    config: NetworkConfig,
    encoder: Vec<Vec<ConvBlock<T>>>,
    fc6: ConvBlock<T>,
    fc7: ConvBlock<T>,
    score_final: ConvBlock<T>,
    score_pool4: ConvBlock<T>,
    score_pool3: ConvBlock<T>,
    upscore2: ParamState<T>,
    upscore_pool4: ParamState<T>,
    upscore8: ParamState<T>,
}

/// Record of the padding applied on ingestion.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct PadInfo {
    orig_h: usize,
    orig_w: usize,
    top: usize,
    left: usize,
}

/// Activations retained by a forward pass for the backward pass.
pub struct ForwardCache<T: Scalar> {
    train_mode: bool,
    pad: PadInfo,
    enc_inputs: Vec<Tensor<T>>,
    enc_zs: Vec<Tensor<T>>,
    pool_argmax: Vec<Vec<usize>>,
    pool_in_shapes: Vec<[usize; 4]>,
    pool3: Tensor<T>,
    pool4: Tensor<T>,
    fc6_input: Tensor<T>,
    fc6_z: Tensor<T>,
    drop6: DropoutMask,
    fc7_input: Tensor<T>,
    fc7_z: Tensor<T>,
    drop7: DropoutMask,
    score_final_input: Tensor<T>,
    score_final_out: Tensor<T>,
    fuse4: Tensor<T>,
    fuse3: Tensor<T>,
    probs: Tensor<T>,
}

impl<T: Scalar> ForwardCache<T> {
    /// Whether the pass ran with dropout active.
    pub fn train_mode(&self) -> bool {
        self.train_mode
    }

    /// Two-channel softmax output at padded extents.
    pub fn probs(&self) -> &Tensor<T> {
        &self.probs
    }

    /// Third-pool feature map (the 1/8-scale skip source).
    pub fn pool3(&self) -> &Tensor<T> {
        &self.pool3
    }

    /// Fourth-pool feature map (the 1/16-scale skip source).
    pub fn pool4(&self) -> &Tensor<T> {
        &self.pool4
    }

    /// Class scores of the final encoder stage, before upsampling.
    pub fn score_final(&self) -> &Tensor<T> {
        &self.score_final_out
    }
}

/// Builds and initializes a model: encoder and FC kernels from truncated
/// Gaussians (fan-in scaled), class scores from a low-std truncated
/// Gaussian, upsamplers from exact bilinear kernels.
pub fn build_model<T: Scalar>(config: &NetworkConfig, init_seed: u64) -> Result<Model<T>, NetworkError> {
    config.validate()?;
    let mut model = Model::zeroed(config.clone());
    let mut index = 0u64;
    model.visit_params_mut(&mut |name: &str, p: &mut ParamState<T>| {
        let shape = p.value.shape();
        let param_seed = seed::derive_indexed(init_seed, "init", index);
        index += 1;
        if name.ends_with(".bias") {
            return; // biases start at zero
        }
        if name.starts_with("upscore") {
            return; // bilinear kernels are assigned below
        }
        // Fan-in-scaled truncated Gaussian for feature extractors, a fixed
        // low std for the class scores so the decoder starts near zero.
        let std = if name.starts_with("score") {
            SCORE_INIT_STD
        } else {
            let [_, in_c, kh, kw] = shape;
            (2.0 / (in_c * kh * kw) as f64).sqrt()
        };
        p.value = truncated_gaussian_init(shape, std, param_seed).expect("std > 0");
    });
    let classes = config.num_classes;
    model.upscore2.value = bilinear_kernel(2, classes);
    model.upscore_pool4.value = bilinear_kernel(2, classes);
    model.upscore8.value = bilinear_kernel(8, classes);
    Ok(model)
}

impl<T: Scalar> Model<T> {
    /// All parameter tensors zeroed; used by init and by the frozen loader.
    pub(crate) fn zeroed(config: NetworkConfig) -> Self {
        let widths = config.scaled_widths();
        let fc = config.scaled_fc();
        let classes = config.num_classes;
        let mut encoder = Vec::with_capacity(5);
        let mut in_c = 3;
        for (stage, &n_convs) in STAGE_CONVS.iter().enumerate() {
            let out_c = widths[stage];
            let mut blocks = Vec::with_capacity(n_convs);
            for _ in 0..n_convs {
                blocks.push(ConvBlock::zeroed(out_c, in_c, 3));
                in_c = out_c;
            }
            encoder.push(blocks);
        }
        Self {
            config,
            encoder,
            fc6: ConvBlock::zeroed(fc, widths[4], FC6_KERNEL),
            fc7: ConvBlock::zeroed(fc, fc, 1),
            score_final: ConvBlock::zeroed(classes, fc, 1),
            score_pool4: ConvBlock::zeroed(classes, widths[3], 1),
            score_pool3: ConvBlock::zeroed(classes, widths[2], 1),
            upscore2: ParamState::new(Tensor::zeros([classes, classes, 4, 4])),
            upscore_pool4: ParamState::new(Tensor::zeros([classes, classes, 4, 4])),
            upscore8: ParamState::new(Tensor::zeros([classes, classes, 16, 16])),
        }
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    /// Visits every parameter in canonical order with its name.
    pub fn visit_params(&self, f: &mut dyn FnMut(&str, &ParamState<T>)) {
        for (stage, blocks) in self.encoder.iter().enumerate() {
            for (i, block) in blocks.iter().enumerate() {
                f(&format!("conv{}_{}.weight", stage + 1, i + 1), &block.weight);
                f(&format!("conv{}_{}.bias", stage + 1, i + 1), &block.bias);
            }
        }
        f("fc6.weight", &self.fc6.weight);
        f("fc6.bias", &self.fc6.bias);
        f("fc7.weight", &self.fc7.weight);
        f("fc7.bias", &self.fc7.bias);
        f("score_final.weight", &self.score_final.weight);
        f("score_final.bias", &self.score_final.bias);
        f("score_pool4.weight", &self.score_pool4.weight);
        f("score_pool4.bias", &self.score_pool4.bias);
        f("score_pool3.weight", &self.score_pool3.weight);
        f("score_pool3.bias", &self.score_pool3.bias);
        f("upscore2.weight", &self.upscore2);
        f("upscore_pool4.weight", &self.upscore_pool4);
        f("upscore8.weight", &self.upscore8);
    }

    /// Mutable visit in the same canonical order as [`Model::visit_params`].
    pub fn visit_params_mut(&mut self, f: &mut dyn FnMut(&str, &mut ParamState<T>)) {
        for (stage, blocks) in self.encoder.iter_mut().enumerate() {
            for (i, block) in blocks.iter_mut().enumerate() {
                f(&format!("conv{}_{}.weight", stage + 1, i + 1), &mut block.weight);
                f(&format!("conv{}_{}.bias", stage + 1, i + 1), &mut block.bias);
            }
        }
        f("fc6.weight", &mut self.fc6.weight);
        f("fc6.bias", &mut self.fc6.bias);
        f("fc7.weight", &mut self.fc7.weight);
        f("fc7.bias", &mut self.fc7.bias);
        f("score_final.weight", &mut self.score_final.weight);
        f("score_final.bias", &mut self.score_final.bias);
        f("score_pool4.weight", &mut self.score_pool4.weight);
        f("score_pool4.bias", &mut self.score_pool4.bias);
        f("score_pool3.weight", &mut self.score_pool3.weight);
        f("score_pool3.bias", &mut self.score_pool3.bias);
        f("upscore2.weight", &mut self.upscore2);
        f("upscore_pool4.weight", &mut self.upscore_pool4);
        f("upscore8.weight", &mut self.upscore8);
    }

    /// Parameter names in canonical order.
    pub fn param_names(&self) -> Vec<String> {
        let mut names = Vec::new();
        self.visit_params(&mut |name, _| names.push(name.to_string()));
        names
    }

    /// Looks a parameter up by canonical name.
    pub fn param(&self, name: &str) -> Option<ParamState<T>>
    where
        T: Clone,
    {
        let mut found = None;
        self.visit_params(&mut |n, p| {
            if n == name {
                found = Some(p.clone());
            }
        });
        found
    }

    /// Total number of scalar parameters.
    pub fn param_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, p| n += p.value.len());
        n
    }

    /// Number of parameter tensors.
    pub fn tensor_count(&self) -> usize {
        let mut n = 0;
        self.visit_params(&mut |_, _| n += 1);
        n
    }

    pub fn zero_grads(&mut self) {
        self.visit_params_mut(&mut |_, p| p.zero_grad());
    }

    /// Precision conversion of every parameter (used by the f64 twin in
    /// gradient checks).
    pub fn cast<U: Scalar>(&self) -> Model<U> {
        let mut out = Model::<U>::zeroed(self.config.clone());
        let mut source = Vec::new();
        self.visit_params(&mut |_, p| source.push(p.cast::<U>()));
        let mut i = 0;
        out.visit_params_mut(&mut |_, p| {
            *p = source[i].clone();
            i += 1;
        });
        out
    }

    fn pad_image(&self, image: &Image) -> Result<(Tensor<T>, PadInfo), NetworkError> {
        let (h, w) = (image.height(), image.width());
        let (want_h, want_w) = (self.config.input_height, self.config.input_width);
        if padded_extent(h) != want_h || padded_extent(w) != want_w {
            return Err(NetworkError::SizeMismatch {
                got_h: h,
                got_w: w,
                want_h,
                want_w,
            });
        }
        let top = (want_h - h) / 2;
        let left = (want_w - w) / 2;
        let mut input = Tensor::zeros([1, 3, want_h, want_w]);
        for c in 0..3 {
            for y in 0..h {
                let row = input.row_mut(0, c, top + y);
                for x in 0..w {
                    row[left + x] = T::from_f64(image.get(c, y, x) as f64);
                }
            }
        }
        Ok((
            input,
            PadInfo {
                orig_h: h,
                orig_w: w,
                top,
                left,
            },
        ))
    }

    /// Full forward pass over a padded input tensor.
    fn forward_padded(
        &self,
        input: Tensor<T>,
        pad: PadInfo,
        train_mode: bool,
        rng_seed: u64,
    ) -> Result<ForwardCache<T>, NetworkError> {
        let mut enc_inputs = Vec::with_capacity(13);
        let mut enc_zs = Vec::with_capacity(13);
        let mut pool_argmax = Vec::with_capacity(5);
        let mut pool_in_shapes = Vec::with_capacity(5);
        let mut pool3 = None;
        let mut pool4 = None;

        let mut act = input;
        for (stage, blocks) in self.encoder.iter().enumerate() {
            for block in blocks {
                let z = conv2d(&act, &block.weight.value, block.bias.value.data(), 1, 1)?;
                enc_inputs.push(act);
                act = relu(&z);
                enc_zs.push(z);
            }
            pool_in_shapes.push(act.shape());
            let pooled = maxpool2d(&act)?;
            pool_argmax.push(pooled.argmax);
            act = pooled.output;
            if stage == 2 {
                pool3 = Some(act.clone());
            } else if stage == 3 {
                pool4 = Some(act.clone());
            }
        }
        let pool3 = pool3.expect("stage 3 ran");
        let pool4 = pool4.expect("stage 4 ran");

        let fc6_input = act;
        let fc6_z = conv2d(
            &fc6_input,
            &self.fc6.weight.value,
            self.fc6.bias.value.data(),
            1,
            FC6_KERNEL / 2,
        )?;
        let fc6_act = relu(&fc6_z);
        let (fc7_input, drop6) = dropout(
            &fc6_act,
            FC_DROPOUT,
            train_mode,
            seed::derive(rng_seed, "dropout-fc6"),
        )?;

        let fc7_z = conv2d(
            &fc7_input,
            &self.fc7.weight.value,
            self.fc7.bias.value.data(),
            1,
            0,
        )?;
        let fc7_act = relu(&fc7_z);
        let (score_final_input, drop7) = dropout(
            &fc7_act,
            FC_DROPOUT,
            train_mode,
            seed::derive(rng_seed, "dropout-fc7"),
        )?;

        let score_final_out = conv2d(
            &score_final_input,
            &self.score_final.weight.value,
            self.score_final.bias.value.data(),
            1,
            0,
        )?;
        let up2 = transposed_conv2d(&score_final_out, &self.upscore2.value, 2, 1)?;
        let score_p4 = conv2d(
            &pool4,
            &self.score_pool4.weight.value,
            self.score_pool4.bias.value.data(),
            1,
            0,
        )?;
        let fuse4 = add_tensors(&up2, &score_p4)?;

        let up4 = transposed_conv2d(&fuse4, &self.upscore_pool4.value, 2, 1)?;
        let score_p3 = conv2d(
            &pool3,
            &self.score_pool3.weight.value,
            self.score_pool3.bias.value.data(),
            1,
            0,
        )?;
        let fuse3 = add_tensors(&up4, &score_p3)?;

        let logits = transposed_conv2d(&fuse3, &self.upscore8.value, 8, 4)?;
        let probs = softmax_2class(&logits)?;

        Ok(ForwardCache {
            train_mode,
            pad,
            enc_inputs,
            enc_zs,
            pool_argmax,
            pool_in_shapes,
            pool3,
            pool4,
            fc6_input,
            fc6_z,
            drop6,
            fc7_input,
            fc7_z,
            drop7,
            score_final_input,
            score_final_out,
            fuse4,
            fuse3,
            probs,
        })
    }

    /// Forward pass over an image: pads up to the configured extents, runs
    /// the network, and returns the positive-class probability map cropped
    /// back to the image extents.
    pub fn forward(
        &self,
        image: &Image,
        train_mode: bool,
        rng_seed: u64,
    ) -> Result<(ProbabilityMap, ForwardCache<T>), NetworkError> {
        let (input, pad) = self.pad_image(image)?;
        let cache = self.forward_padded(input, pad, train_mode, rng_seed)?;
        let map = self.extract_probability_map(&cache);
        Ok((map, cache))
    }

    fn extract_probability_map(&self, cache: &ForwardCache<T>) -> ProbabilityMap {
        let pad = cache.pad;
        let mut data = Vec::with_capacity(pad.orig_h * pad.orig_w);
        for y in 0..pad.orig_h {
            for x in 0..pad.orig_w {
                let p = cache
                    .probs
                    .at(0, CHANNEL_POSITIVE, pad.top + y, pad.left + x)
                    .to_f64();
                data.push(p.clamp(0.0, 1.0) as f32);
            }
        }
        ProbabilityMap::from_vec(pad.orig_h, pad.orig_w, data).expect("probabilities in range")
    }

    /// Inference: a pure function of the model and image.
    pub fn predict(&self, image: &Image) -> Result<ProbabilityMap, NetworkError> {
        Ok(self.forward(image, false, 0)?.0)
    }

    /// Cross-entropy loss against `labels` plus a full backward pass;
    /// gradients accumulate into every parameter's `grad`.
    pub fn backward(
        &mut self,
        cache: &ForwardCache<T>,
        labels: &LabelMap,
    ) -> Result<T, NetworkError> {
        let pad = cache.pad;
        if labels.height() != pad.orig_h || labels.width() != pad.orig_w {
            return Err(NetworkError::LabelMismatch {
                got_h: labels.height(),
                got_w: labels.width(),
                want_h: pad.orig_h,
                want_w: pad.orig_w,
            });
        }
        // Loss lives on the original extents; padded pixels contribute no
        // gradient.
        let mut cropped = Tensor::zeros([1, 2, pad.orig_h, pad.orig_w]);
        for c in 0..2 {
            for y in 0..pad.orig_h {
                for x in 0..pad.orig_w {
                    *cropped.at_mut(0, c, y, x) = cache.probs.at(0, c, pad.top + y, pad.left + x);
                }
            }
        }
        let (loss, grad_cropped) = cross_entropy(&cropped, labels)?;
        let mut grad_logits = Tensor::zeros(cache.probs.shape());
        for c in 0..2 {
            for y in 0..pad.orig_h {
                for x in 0..pad.orig_w {
                    *grad_logits.at_mut(0, c, pad.top + y, pad.left + x) =
                        grad_cropped.at(0, c, y, x);
                }
            }
        }
        self.backward_from_logit_grad(cache, &grad_logits)?;
        Ok(loss)
    }

    /// Backward pass from an arbitrary upstream gradient on the logits.
    /// Linear in the upstream gradient.
    pub fn backward_from_logit_grad(
        &mut self,
        cache: &ForwardCache<T>,
        grad_logits: &Tensor<T>,
    ) -> Result<(), NetworkError> {
        if grad_logits.shape() != cache.probs.shape() {
            return Err(NetworkError::StaleCache(format!(
                "logit gradient shape {:?} does not match cached output {:?}",
                grad_logits.shape(),
                cache.probs.shape()
            )));
        }
        if cache.enc_inputs.len() != STAGE_CONVS.iter().sum::<usize>() {
            return Err(NetworkError::StaleCache(
                "cache does not hold one record per encoder convolution".into(),
            ));
        }

        // Decoder.
        let g8 = transposed_conv2d_backward(&cache.fuse3, &self.upscore8.value, 8, 4, grad_logits)?;
        self.upscore8.accumulate_grad(&g8.kernel)?;
        let d_fuse3 = g8.input;

        let s3 = conv2d_backward(&cache.pool3, &self.score_pool3.weight.value, 1, 0, &d_fuse3)?;
        self.score_pool3.weight.accumulate_grad(&s3.kernel)?;
        accumulate_bias(&mut self.score_pool3.bias, &s3.bias)?;
        let d_pool3_skip = s3.input;

        let g4 = transposed_conv2d_backward(
            &cache.fuse4,
            &self.upscore_pool4.value,
            2,
            1,
            &d_fuse3,
        )?;
        self.upscore_pool4.accumulate_grad(&g4.kernel)?;
        let d_fuse4 = g4.input;

        let s4 = conv2d_backward(&cache.pool4, &self.score_pool4.weight.value, 1, 0, &d_fuse4)?;
        self.score_pool4.weight.accumulate_grad(&s4.kernel)?;
        accumulate_bias(&mut self.score_pool4.bias, &s4.bias)?;
        let d_pool4_skip = s4.input;

        let g2 = transposed_conv2d_backward(
            &cache.score_final_out,
            &self.upscore2.value,
            2,
            1,
            &d_fuse4,
        )?;
        self.upscore2.accumulate_grad(&g2.kernel)?;
        let d_score_final = g2.input;

        let sf = conv2d_backward(
            &cache.score_final_input,
            &self.score_final.weight.value,
            1,
            0,
            &d_score_final,
        )?;
        self.score_final.weight.accumulate_grad(&sf.kernel)?;
        accumulate_bias(&mut self.score_final.bias, &sf.bias)?;

        // Convolutionalized FC stages.
        let d = dropout_backward(&sf.input, &cache.drop7)?;
        let d = relu_backward(&cache.fc7_z, &d)?;
        let c7 = conv2d_backward(&cache.fc7_input, &self.fc7.weight.value, 1, 0, &d)?;
        self.fc7.weight.accumulate_grad(&c7.kernel)?;
        accumulate_bias(&mut self.fc7.bias, &c7.bias)?;

        let d = dropout_backward(&c7.input, &cache.drop6)?;
        let d = relu_backward(&cache.fc6_z, &d)?;
        let c6 = conv2d_backward(
            &cache.fc6_input,
            &self.fc6.weight.value,
            1,
            FC6_KERNEL / 2,
            &d,
        )?;
        self.fc6.weight.accumulate_grad(&c6.kernel)?;
        accumulate_bias(&mut self.fc6.bias, &c6.bias)?;

        // Encoder, deepest stage first; skip gradients join at their pools.
        let mut d = c6.input;
        let mut conv_idx = cache.enc_inputs.len();
        for stage in (0..5).rev() {
            if stage == 3 {
                add_into(&mut d, &d_pool4_skip)?;
            } else if stage == 2 {
                add_into(&mut d, &d_pool3_skip)?;
            }
            d = maxpool2d_backward(&d, &cache.pool_argmax[stage], cache.pool_in_shapes[stage])?;
            for block in self.encoder[stage].iter_mut().rev() {
                conv_idx -= 1;
                let masked = relu_backward(&cache.enc_zs[conv_idx], &d)?;
                let cg = conv2d_backward(
                    &cache.enc_inputs[conv_idx],
                    &block.weight.value,
                    1,
                    1,
                    &masked,
                )?;
                block.weight.accumulate_grad(&cg.kernel)?;
                accumulate_bias(&mut block.bias, &cg.bias)?;
                d = cg.input;
            }
        }
        Ok(())
    }
}

fn add_tensors<T: Scalar>(a: &Tensor<T>, b: &Tensor<T>) -> Result<Tensor<T>, NumericsError> {
    let mut out = a.clone();
    add_into(&mut out, b)?;
    Ok(out)
}

fn add_into<T: Scalar>(a: &mut Tensor<T>, b: &Tensor<T>) -> Result<(), NumericsError> {
    if a.shape() != b.shape() {
        return Err(NumericsError::ShapeMismatch {
            context: "add",
            dimension: "shape",
            expected: format!("{:?}", a.shape()),
            got: format!("{:?}", b.shape()),
        });
    }
    for (x, &y) in a.data_mut().iter_mut().zip(b.data()) {
        *x = *x + y;
    }
    Ok(())
}

fn accumulate_bias<T: Scalar>(bias: &mut ParamState<T>, grad: &[T]) -> Result<(), NumericsError> {
    if grad.len() != bias.grad.len() {
        return Err(NumericsError::ShapeMismatch {
            context: "accumulate_bias",
            dimension: "bias length",
            expected: format!("{}", bias.grad.len()),
            got: format!("{}", grad.len()),
        });
    }
    for (g, &d) in bias.grad.data_mut().iter_mut().zip(grad) {
        *g = *g + d;
    }
    Ok(())
}

/// Training-loop settings; the study-case axes plus bookkeeping.
#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub learning_rate: f64,
    pub iterations: usize,
    pub data_aug: bool,
    pub augmentation: AugmentationConfig,
    /// Loss is recorded on the first iteration, every `record_every`
    /// iterations after that, and on the last iteration.
    pub record_every: usize,
}

impl TrainOptions {
    pub fn new(learning_rate: f64, iterations: usize, data_aug: bool) -> Self {
        Self {
            learning_rate,
            iterations,
            data_aug,
            augmentation: AugmentationConfig::default(),
            record_every: 10,
        }
    }
}

/// One recorded loss sample.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainRecord {
    pub iteration: usize,
    pub loss: f64,
    pub wall_clock_ms: f64,
}

/// Runs single-sample forward/backward/Adam iterations, sampling the
/// training set uniformly with the seeded RNG and (optionally) augmenting
/// each drawn image.
pub fn train(
    model: &mut Model<f32>,
    train_set: &[(Image, LabelMap)],
    options: &TrainOptions,
    rng_seed: u64,
) -> Result<Vec<TrainRecord>, NetworkError> {
    if train_set.is_empty() {
        return Err(NetworkError::EmptyTrainSet);
    }
    if options.iterations == 0 {
        return Err(NetworkError::ZeroIterations);
    }
    let adam = AdamConfig::new(options.learning_rate);
    let mut sampler = seed::rng(seed::derive(rng_seed, "sample-order"));
    let mut records = Vec::new();
    let started = Instant::now();
    for iter in 0..options.iterations {
        let idx = sampler.gen_range(0..train_set.len());
        let (image, label) = &train_set[idx];
        let drawn;
        let image = if options.data_aug {
            drawn = augment(
                image,
                &options.augmentation,
                seed::derive_indexed(rng_seed, "augment", iter as u64),
            );
            &drawn
        } else {
            image
        };
        let (_, cache) = model.forward(
            image,
            true,
            seed::derive_indexed(rng_seed, "dropout", iter as u64),
        )?;
        let loss = model.backward(&cache, label)?;
        let mut step_err = None;
        model.visit_params_mut(&mut |_, p| {
            if step_err.is_none() {
                if let Err(e) = adam_update(p, &adam) {
                    step_err = Some(e);
                }
            }
        });
        if let Some(e) = step_err {
            return Err(e.into());
        }
        model.zero_grads();
        let last = iter + 1 == options.iterations;
        if iter % options.record_every.max(1) == 0 || last {
            records.push(TrainRecord {
                iteration: iter,
                loss: loss as f64,
                wall_clock_ms: started.elapsed().as_secs_f64() * 1e3,
            });
        }
    }
    Ok(records)
}

/// Serializes a model to the frozen inference format.
pub fn freeze(model: &Model<f32>, path: &std::path::Path) -> Result<(), FrozenError> {
    frozen::freeze(model, path)
}

impl crate::evaluation::Segmenter for Model<f32> {
    fn predict_map(&self, image: &Image) -> Result<ProbabilityMap, String> {
        self.predict(image).map_err(|e| e.to_string())
    }
}

/// Trains a fresh network per fold, plugging the FCN into the
/// cross-validation harness. Input extents are inferred from the first
/// training sample (padded up to multiples of 32).
pub struct FcnTrainer {
    pub width_divisor: usize,
    pub augmentation: AugmentationConfig,
    pub record_every: usize,
}

impl FcnTrainer {
    pub fn new(width_divisor: usize) -> Self {
        Self {
            width_divisor,
            augmentation: AugmentationConfig::default(),
            record_every: 10,
        }
    }
}

impl crate::evaluation::FoldTrainer for FcnTrainer {
    type Model = Model<f32>;

    fn train_fold(
        &self,
        train_samples: &[&crate::data::Sample],
        experiment: &crate::evaluation::ExperimentConfig,
        fold_seed: u64,
    ) -> Result<Model<f32>, String> {
        let first = train_samples.first().ok_or("empty training fold")?;
        let config = NetworkConfig::with_divisor(
            padded_extent(first.image.height()),
            padded_extent(first.image.width()),
            self.width_divisor,
        );
        let mut model = build_model::<f32>(&config, seed::derive(fold_seed, "init"))
            .map_err(|e| e.to_string())?;
        let pairs: Vec<(Image, LabelMap)> = train_samples
            .iter()
            .map(|s| (s.image.clone(), s.label.clone()))
            .collect();
        let options = TrainOptions {
            learning_rate: experiment.learning_rate,
            iterations: experiment.iterations,
            data_aug: experiment.data_aug,
            augmentation: self.augmentation,
            record_every: self.record_every,
        };
        train(&mut model, &pairs, &options, seed::derive(fold_seed, "train"))
            .map_err(|e| e.to_string())?;
        Ok(model)
    }
}
