//! Pixel-wise seagrass meadow segmentation for underwater survey imagery.
//!
//! The crate is organised around the lifecycle of a segmentation model:
//!
//! * [`numerics`] — dense rank-4 tensors with hand-written forward/backward
//!   kernels for every layer the network needs, the Adam optimizer and a
//!   finite-difference gradient checker.
//! * [`network`] — the VGG16-FCN8 encoder/decoder at a configurable scale,
//!   its training loop, and a frozen-model file format for deployment.
//! * [`data`] — dataset manifests, PPM/PGM codecs, preprocessing,
//!   brightness/contrast augmentation, k-fold planning and a seeded
//!   synthetic dataset generator.
//! * [`evaluation`] — threshold binarization, confusion matrices, the
//!   accuracy/precision/recall/fall-out/trade-off metric set, ROC curves
//!   with AUC, and the k-fold cross-validation harness.
//! * [`analysis`] — error overlays, multi-annotator mean/uncertainty maps
//!   and network uncertainty bands.
//! * [`pipeline`] — the two-stage online segmentation pipeline with a
//!   latest-wins mailbox, plus the footprint/overlap coverage geometry.
//!
//! All randomness is funnelled through explicit seeds (see [`seed`]); every
//! operation is deterministic given its inputs and seed.

pub mod analysis;
pub mod data;
pub mod evaluation;
pub mod network;
pub mod numerics;
pub mod pipeline;
pub mod seed;
pub mod types;

pub use types::{Image, LabelMap, ProbabilityMap};
