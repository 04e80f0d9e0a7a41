//! Error analysis: false-positive/false-negative overlays, multi-annotator
//! mean and uncertainty maps, network uncertainty bands, and the fraction
//! of misclassified pixels that fall inside an uncertainty region.

use thiserror::Error;

use crate::evaluation::binarize;
use crate::types::{Image, LabelMap, ProbabilityMap, CLASS_POSITIVE};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error("extent mismatch: {context} is {got_h}x{got_w}, expected {want_h}x{want_w}")]
    ExtentMismatch {
        context: &'static str,
        got_h: usize,
        got_w: usize,
        want_h: usize,
        want_w: usize,
    },
    #[error("annotator set needs at least 2 label maps, got {0}")]
    TooFewAnnotators(usize),
}

fn check_extents(
    context: &'static str,
    got: (usize, usize),
    want: (usize, usize),
) -> Result<(), AnalysisError> {
    if got != want {
        return Err(AnalysisError::ExtentMismatch {
            context,
            got_h: got.0,
            got_w: got.1,
            want_h: want.0,
            want_w: want.1,
        });
    }
    Ok(())
}

/// Two or more label maps of one image, drawn by different annotators.
#[derive(Debug, Clone)]
pub struct AnnotatorSet {
    maps: Vec<LabelMap>,
}

impl AnnotatorSet {
    pub fn new(maps: Vec<LabelMap>) -> Result<Self, AnalysisError> {
        if maps.len() < 2 {
            return Err(AnalysisError::TooFewAnnotators(maps.len()));
        }
        let want = (maps[0].height(), maps[0].width());
        for m in &maps[1..] {
            check_extents("annotator map", (m.height(), m.width()), want)?;
        }
        Ok(Self { maps })
    }

    pub fn maps(&self) -> &[LabelMap] {
        &self.maps
    }

    pub fn height(&self) -> usize {
        self.maps[0].height()
    }

    pub fn width(&self) -> usize {
        self.maps[0].width()
    }
}

/// Per-pixel certain/uncertain flags plus the uncertain-area fraction.
#[derive(Debug, Clone, PartialEq)]
pub struct UncertaintyMap {
    height: usize,
    width: usize,
    uncertain: Vec<bool>,
    area_fraction: f64,
}

impl UncertaintyMap {
    pub fn new(height: usize, width: usize, uncertain: Vec<bool>) -> Self {
        assert_eq!(uncertain.len(), height * width, "flag count");
        let count = uncertain.iter().filter(|&&u| u).count();
        let area_fraction = if uncertain.is_empty() {
            0.0
        } else {
            count as f64 / uncertain.len() as f64
        };
        Self {
            height,
            width,
            uncertain,
            area_fraction,
        }
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn is_uncertain(&self, y: usize, x: usize) -> bool {
        self.uncertain[y * self.width + x]
    }

    pub fn flags(&self) -> &[bool] {
        &self.uncertain
    }

    pub fn area_fraction(&self) -> f64 {
        self.area_fraction
    }

    /// Gray rendering: uncertain pixels white.
    pub fn to_gray(&self) -> Vec<f32> {
        self.uncertain.iter().map(|&u| if u { 1.0 } else { 0.0 }).collect()
    }
}

/// Copies the image and recolors errors: false negatives become pure blue,
/// false positives pure green (full channel replacement). Correct pixels
/// pass through untouched.
pub fn error_overlay(
    image: &Image,
    pred: &LabelMap,
    truth: &LabelMap,
) -> Result<Image, AnalysisError> {
    let want = (image.height(), image.width());
    check_extents("prediction", (pred.height(), pred.width()), want)?;
    check_extents("ground truth", (truth.height(), truth.width()), want)?;
    let mut out = image.clone();
    for y in 0..image.height() {
        for x in 0..image.width() {
            let p = pred.get(y, x) == CLASS_POSITIVE;
            let t = truth.get(y, x) == CLASS_POSITIVE;
            if p && !t {
                // False positive: green.
                out.set(0, y, x, 0.0);
                out.set(1, y, x, 1.0);
                out.set(2, y, x, 0.0);
            } else if !p && t {
                // False negative: blue.
                out.set(0, y, x, 0.0);
                out.set(1, y, x, 0.0);
                out.set(2, y, x, 1.0);
            }
        }
    }
    Ok(out)
}

/// Per-pixel arithmetic mean of the annotators' binary values.
pub fn annotator_mean(set: &AnnotatorSet) -> Vec<f32> {
    let n = set.maps.len() as f32;
    let len = set.height() * set.width();
    let mut mean = vec![0.0f32; len];
    for map in &set.maps {
        for (m, &v) in mean.iter_mut().zip(map.data()) {
            *m += v as f32;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    mean
}

/// A pixel is uncertain iff the annotators disagree at it (equivalently,
/// its mean gray level is strictly between 0 and 1).
pub fn annotator_uncertainty(set: &AnnotatorSet) -> UncertaintyMap {
    let first = &set.maps[0];
    let len = set.height() * set.width();
    let mut uncertain = vec![false; len];
    for map in &set.maps[1..] {
        for (u, (&a, &b)) in uncertain.iter_mut().zip(map.data().iter().zip(first.data())) {
            if a != b {
                *u = true;
            }
        }
    }
    UncertaintyMap::new(set.height(), set.width(), uncertain)
}

/// Default low/high binarization band of the network uncertainty area.
pub const NETWORK_UNCERTAINTY_BAND: (f64, f64) = (0.01, 0.99);

/// A pixel is network-uncertain iff its classification flips between the
/// low and high thresholds, i.e. `lo <= p < hi` under the `>=` rule.
pub fn network_uncertainty_band(prob: &ProbabilityMap, lo: f64, hi: f64) -> UncertaintyMap {
    assert!(lo < hi, "band must be ordered");
    let low = binarize(prob, lo);
    let high = binarize(prob, hi);
    let uncertain = low
        .data()
        .iter()
        .zip(high.data())
        .map(|(&l, &h)| l != h)
        .collect();
    UncertaintyMap::new(prob.height(), prob.width(), uncertain)
}

/// Network uncertainty at the standard 1% / 99% band.
pub fn network_uncertainty(prob: &ProbabilityMap) -> UncertaintyMap {
    network_uncertainty_band(prob, NETWORK_UNCERTAINTY_BAND.0, NETWORK_UNCERTAINTY_BAND.1)
}

/// Fraction of misclassified pixels inside the uncertain region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorInUncertainty {
    pub fraction: f64,
    /// True when there were no misclassified pixels at all; the fraction
    /// takes the convention value 1.0.
    pub degenerate: bool,
    pub misclassified: usize,
    pub inside_uncertain: usize,
}

/// `|misclassified AND uncertain| / |misclassified|`.
pub fn error_in_uncertainty_fraction(
    pred: &LabelMap,
    truth: &LabelMap,
    unc: &UncertaintyMap,
) -> Result<ErrorInUncertainty, AnalysisError> {
    let want = (truth.height(), truth.width());
    check_extents("prediction", (pred.height(), pred.width()), want)?;
    check_extents("uncertainty map", (unc.height(), unc.width()), want)?;
    let mut misclassified = 0usize;
    let mut inside = 0usize;
    for y in 0..truth.height() {
        for x in 0..truth.width() {
            if pred.get(y, x) != truth.get(y, x) {
                misclassified += 1;
                if unc.is_uncertain(y, x) {
                    inside += 1;
                }
            }
        }
    }
    if misclassified == 0 {
        return Ok(ErrorInUncertainty {
            fraction: 1.0,
            degenerate: true,
            misclassified: 0,
            inside_uncertain: 0,
        });
    }
    Ok(ErrorInUncertainty {
        fraction: inside as f64 / misclassified as f64,
        degenerate: false,
        misclassified,
        inside_uncertain: inside,
    })
}
