//! Minimal dense-tensor kernel: every layer the segmentation network needs,
//! with hand-written forward and backward passes, the Adam optimizer and a
//! finite-difference gradient checker.
//!
//! All operations are pure functions of their inputs plus an explicit seed;
//! nothing here holds shared mutable state.

mod adam;
mod conv;
mod gradcheck;
mod init;
mod ops;
mod pool;
mod tensor;

pub use adam::{adam_step, adam_update, AdamConfig, ParamState};
pub use conv::{
    conv2d, conv2d_backward, transposed_conv2d, transposed_conv2d_backward, Conv2dGrads,
    TransposedConv2dGrads,
};
pub use gradcheck::{grad_check, grad_check_at, GradCheckReport};
pub use init::{bilinear_kernel, truncated_gaussian_init, DEFAULT_TRUNC_STD};
pub use ops::{
    cross_entropy, dropout, dropout_backward, relu, relu_backward, softmax_2class, DropoutMask,
    CHANNEL_BACKGROUND, CHANNEL_POSITIVE, PROB_CLAMP,
};
pub use pool::{maxpool2d, maxpool2d_backward, PoolResult, POOL_WINDOW};
pub use tensor::{Scalar, Tensor};

use thiserror::Error;

/// Contract violations raised by tensor operations.
#[derive(Debug, Error)]
pub enum NumericsError {
    #[error("{context}: {dimension} mismatch (expected {expected}, got {got})")]
    ShapeMismatch {
        context: &'static str,
        dimension: &'static str,
        expected: String,
        got: String,
    },
    #[error("{context}: bad {dimension}: {detail}")]
    BadDimension {
        context: &'static str,
        dimension: &'static str,
        detail: String,
    },
    #[error("{context}: {detail}")]
    InvalidArgument { context: &'static str, detail: String },
}
