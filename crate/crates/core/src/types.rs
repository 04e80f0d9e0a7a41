//! Pixel-map types shared across the crate: RGB images, binary label maps
//! and per-pixel class-probability maps.
//!
//! Images store three channels of real values in `[0, 1]`, channel-major
//! (channel, then row, then column, width fastest). Label maps are strictly
//! binary: `0` = background, `1` = seagrass. Probability maps hold the
//! positive-class probability per pixel.

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Positive class value of a [`LabelMap`].
pub const CLASS_POSITIVE: u8 = 1;
/// Background class value of a [`LabelMap`].
pub const CLASS_BACKGROUND: u8 = 0;

#[derive(Debug, Error)]
pub enum MapError {
    #[error("data length {got} does not match {channels}x{height}x{width}")]
    LengthMismatch {
        got: usize,
        channels: usize,
        height: usize,
        width: usize,
    },
    #[error("label map contains non-binary value {0}")]
    NonBinaryLabel(u8),
    #[error("value {0} outside [0, 1]")]
    OutOfRange(f32),
}

/// A three-channel RGB image with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    height: usize,
    width: usize,
    /// Channel-major: `data[(c * height + y) * width + x]`.
    data: Vec<f32>,
}

impl Image {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![0.0; 3 * height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Result<Self, MapError> {
        if data.len() != 3 * height * width {
            return Err(MapError::LengthMismatch {
                got: data.len(),
                channels: 3,
                height,
                width,
            });
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, channel: usize, y: usize, x: usize) -> f32 {
        self.data[(channel * self.height + y) * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, channel: usize, y: usize, x: usize, value: f32) {
        self.data[(channel * self.height + y) * self.width + x] = value;
    }

    /// Raw channel-major samples.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    /// One full channel plane, row-major.
    pub fn channel(&self, channel: usize) -> &[f32] {
        let plane = self.height * self.width;
        &self.data[channel * plane..(channel + 1) * plane]
    }

    /// Mean value of one channel.
    pub fn channel_mean(&self, channel: usize) -> f32 {
        let plane = self.channel(channel);
        if plane.is_empty() {
            return 0.0;
        }
        let sum: f64 = plane.iter().map(|&v| v as f64).sum();
        (sum / plane.len() as f64) as f32
    }

    /// True when every sample lies in `[0, 1]`.
    pub fn in_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }
}

/// A binary per-pixel class mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    height: usize,
    width: usize,
    data: Vec<u8>,
}

impl LabelMap {
    pub fn new(height: usize, width: usize) -> Self {
        Self {
            height,
            width,
            data: vec![CLASS_BACKGROUND; height * width],
        }
    }

    pub fn from_vec(height: usize, width: usize, data: Vec<u8>) -> Result<Self, MapError> {
        if data.len() != height * width {
            return Err(MapError::LengthMismatch {
                got: data.len(),
                channels: 1,
                height,
                width,
            });
        }
        if let Some(&bad) = data.iter().find(|&&v| v > 1) {
            return Err(MapError::NonBinaryLabel(bad));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> u8 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, y: usize, x: usize, value: u8) {
        debug_assert!(value <= 1);
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of positive pixels.
    pub fn positive_count(&self) -> usize {
        self.data.iter().filter(|&&v| v == CLASS_POSITIVE).count()
    }

    /// Fraction of positive pixels.
    pub fn positive_fraction(&self) -> f64 {
        if self.data.is_empty() {
            return 0.0;
        }
        self.positive_count() as f64 / self.data.len() as f64
    }

    /// True when both classes occur at least once.
    pub fn has_both_classes(&self) -> bool {
        let positives = self.positive_count();
        positives > 0 && positives < self.data.len()
    }
}

/// Per-pixel positive-class probability in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbabilityMap {
    height: usize,
    width: usize,
    data: Vec<f32>,
}

impl ProbabilityMap {
    pub fn from_vec(height: usize, width: usize, data: Vec<f32>) -> Result<Self, MapError> {
        if data.len() != height * width {
            return Err(MapError::LengthMismatch {
                got: data.len(),
                channels: 1,
                height,
                width,
            });
        }
        if let Some(&bad) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(MapError::OutOfRange(bad));
        }
        Ok(Self {
            height,
            width,
            data,
        })
    }

    pub fn constant(height: usize, width: usize, p: f32) -> Self {
        assert!((0.0..=1.0).contains(&p));
        Self {
            height,
            width,
            data: vec![p; height * width],
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn get(&self, y: usize, x: usize) -> f32 {
        self.data[y * self.width + x]
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }
}
