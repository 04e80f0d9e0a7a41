//! Dataset handling: manifest loading, preprocessing, augmentation,
//! cross-validation fold planning and synthetic data generation.
//!
//! On-disk formats are binary PPM for images and binary PGM for label maps
//! (positive class white). A dataset is described by a JSON manifest whose
//! image/label paths resolve relative to the manifest file.

mod pnm;
mod synth;

pub use pnm::{read_pgm_gray, read_pgm_label, read_ppm, write_pgm_gray, write_pgm_label, write_ppm};
pub use synth::synth_dataset;

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed;
use crate::types::{Image, LabelMap};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("codec error on {path}: {detail}")]
    Codec { path: PathBuf, detail: String },
    #[error("manifest parse error on {path}: {detail}")]
    ManifestParse { path: PathBuf, detail: String },
    #[error("duplicate sample id {0}")]
    DuplicateId(String),
    #[error("sample {id}: unreadable file: {source}")]
    UnreadableSample {
        id: String,
        #[source]
        source: Box<DataError>,
    },
    #[error("sample {id}: image is {image_h}x{image_w} but label is {label_h}x{label_w}")]
    SizeMismatch {
        id: String,
        image_h: usize,
        image_w: usize,
        label_h: usize,
        label_w: usize,
    },
    #[error("need at least {k} samples for {k} folds, got {count}")]
    TooFewSamples { count: usize, k: usize },
    #[error("{0}")]
    InvalidArgument(String),
}

/// Which split a sample belongs to (see the dataset-managing scheme).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetAssignment {
    /// Train/test pool, split by cross-validation.
    Mix,
    /// Held-out set from a different camera, used only as extra test data.
    Extra,
}

/// One manifest row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    pub image: PathBuf,
    pub label: PathBuf,
    #[serde(default)]
    pub location: String,
    #[serde(default)]
    pub camera: String,
    pub set: SetAssignment,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct ManifestFile {
    entries: Vec<ManifestEntry>,
}

/// A dataset description: entries plus the directory they resolve against.
#[derive(Debug, Clone)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
    base_dir: PathBuf,
}

impl DatasetManifest {
    /// Builds a manifest in memory; paths resolve against `base_dir`.
    pub fn new(entries: Vec<ManifestEntry>, base_dir: PathBuf) -> Result<Self, DataError> {
        let mut seen = HashSet::new();
        for e in &entries {
            if !seen.insert(e.id.clone()) {
                return Err(DataError::DuplicateId(e.id.clone()));
            }
        }
        Ok(Self { entries, base_dir })
    }

    pub fn load(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let file: ManifestFile =
            serde_json::from_str(&text).map_err(|e| DataError::ManifestParse {
                path: path.to_path_buf(),
                detail: e.to_string(),
            })?;
        let base_dir = path.parent().unwrap_or(Path::new(".")).to_path_buf();
        Self::new(file.entries, base_dir)
    }

    pub fn save(&self, path: &Path) -> Result<(), DataError> {
        let file = ManifestFile {
            entries: self.entries.clone(),
        };
        let text = serde_json::to_string_pretty(&file).expect("manifest serializes");
        std::fs::write(path, text + "\n").map_err(|e| DataError::Io {
            path: path.to_path_buf(),
            source: e,
        })
    }

    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }
}

/// Per-sample provenance carried through loading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleMeta {
    pub location: String,
    pub camera: String,
    pub set: SetAssignment,
}

/// A loaded image/label pair.
#[derive(Debug, Clone)]
pub struct Sample {
    pub id: String,
    pub image: Image,
    pub label: LabelMap,
    pub meta: SampleMeta,
}

/// Loads and validates every manifest entry: images normalized to `[0,1]`,
/// labels binarized at gray > 0.5, extents verified pairwise equal.
pub fn load_dataset(manifest: &DatasetManifest) -> Result<Vec<Sample>, DataError> {
    let mut samples = Vec::with_capacity(manifest.entries.len());
    for entry in &manifest.entries {
        let wrap = |e: DataError| DataError::UnreadableSample {
            id: entry.id.clone(),
            source: Box::new(e),
        };
        let image = read_ppm(&manifest.resolve(&entry.image)).map_err(wrap)?;
        let label = read_pgm_label(&manifest.resolve(&entry.label)).map_err(wrap)?;
        if image.height() != label.height() || image.width() != label.width() {
            return Err(DataError::SizeMismatch {
                id: entry.id.clone(),
                image_h: image.height(),
                image_w: image.width(),
                label_h: label.height(),
                label_w: label.width(),
            });
        }
        samples.push(Sample {
            id: entry.id.clone(),
            image,
            label,
            meta: SampleMeta {
                location: entry.location.clone(),
                camera: entry.camera.clone(),
                set: entry.set,
            },
        });
    }
    Ok(samples)
}

/// Box-average resampling to the target extents. Each destination pixel is
/// the area-weighted mean of the source pixels its footprint covers, so
/// constant images stay constant and integer-ratio decimation is a plain
/// box filter.
pub fn preprocess(image: &Image, target_h: usize, target_w: usize) -> Image {
    assert!(target_h > 0 && target_w > 0, "target extents must be positive");
    if target_h == image.height() && target_w == image.width() {
        return image.clone();
    }
    let (src_h, src_w) = (image.height(), image.width());
    let sy = src_h as f64 / target_h as f64;
    let sx = src_w as f64 / target_w as f64;
    let mut out = Image::new(target_h, target_w);
    for c in 0..3 {
        let plane = image.channel(c);
        for dy in 0..target_h {
            let y0 = dy as f64 * sy;
            let y1 = y0 + sy;
            let iy0 = y0.floor() as usize;
            let iy1 = (y1.ceil() as usize).min(src_h);
            for dx in 0..target_w {
                let x0 = dx as f64 * sx;
                let x1 = x0 + sx;
                let ix0 = x0.floor() as usize;
                let ix1 = (x1.ceil() as usize).min(src_w);
                let mut acc = 0.0f64;
                let mut total = 0.0f64;
                for iy in iy0..iy1 {
                    let wy = (y1.min((iy + 1) as f64) - y0.max(iy as f64)).max(0.0);
                    if wy == 0.0 {
                        continue;
                    }
                    let row = &plane[iy * src_w..(iy + 1) * src_w];
                    for ix in ix0..ix1 {
                        let wx = (x1.min((ix + 1) as f64) - x0.max(ix as f64)).max(0.0);
                        let w = wy * wx;
                        acc += w * row[ix] as f64;
                        total += w;
                    }
                }
                out.set(c, dy, dx, (acc / total) as f32);
            }
        }
    }
    out
}

/// Brightness/contrast augmentation ranges. Brightness is an additive delta
/// (fraction of the dynamic range); contrast is multiplicative about the
/// per-image per-channel mean.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AugmentationConfig {
    pub brightness_delta: (f64, f64),
    pub contrast_factor: (f64, f64),
}

impl Default for AugmentationConfig {
    fn default() -> Self {
        Self {
            brightness_delta: (-0.2, 0.2),
            contrast_factor: (0.8, 1.2),
        }
    }
}

impl AugmentationConfig {
    pub fn validate(&self) -> Result<(), DataError> {
        let (d0, d1) = self.brightness_delta;
        let (g0, g1) = self.contrast_factor;
        if !(d0.is_finite() && d1.is_finite() && d0 <= d1) {
            return Err(DataError::InvalidArgument(format!(
                "brightness delta range ({d0}, {d1}) is not a finite ordered range"
            )));
        }
        if !(g0.is_finite() && g1.is_finite() && g0 <= g1 && g0 > 0.0) {
            return Err(DataError::InvalidArgument(format!(
                "contrast factor range ({g0}, {g1}) must be finite, ordered and positive"
            )));
        }
        Ok(())
    }
}

fn draw_uniform(rng: &mut impl Rng, range: (f64, f64)) -> f64 {
    if range.0 == range.1 {
        range.0
    } else {
        rng.gen_range(range.0..range.1)
    }
}

/// Applies one random contrast/brightness draw:
/// `out = clamp(mean + gamma * (pixel - mean) + delta, 0, 1)` per channel.
/// The paired label map is untouched by augmentation.
pub fn augment(image: &Image, config: &AugmentationConfig, rng_seed: u64) -> Image {
    let mut rng = seed::rng(rng_seed);
    let gamma = draw_uniform(&mut rng, config.contrast_factor);
    let delta = draw_uniform(&mut rng, config.brightness_delta);
    let mut out = image.clone();
    for c in 0..3 {
        let mean = image.channel_mean(c) as f64;
        for y in 0..image.height() {
            for x in 0..image.width() {
                let v = image.get(c, y, x) as f64;
                out.set(c, y, x, (mean + gamma * (v - mean) + delta).clamp(0.0, 1.0) as f32);
            }
        }
    }
    out
}

/// A k-fold partition of sample ids.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    ids: Vec<String>,
    /// Fold index per position in `ids`.
    assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_of(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id).map(|i| self.assignment[i])
    }

    /// Ids assigned to one fold, in input order.
    pub fn members(&self, fold: usize) -> Vec<&str> {
        self.ids
            .iter()
            .zip(&self.assignment)
            .filter(|&(_, &f)| f == fold)
            .map(|(id, _)| id.as_str())
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.k];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }
}

/// Seeded shuffle followed by round-robin assignment: folds partition the
/// sample set and sizes differ by at most one.
pub fn make_folds(sample_ids: &[String], k: usize, rng_seed: u64) -> Result<FoldPlan, DataError> {
    if k < 2 {
        return Err(DataError::InvalidArgument(format!(
            "fold count must be at least 2, got {k}"
        )));
    }
    if sample_ids.len() < k {
        return Err(DataError::TooFewSamples {
            count: sample_ids.len(),
            k,
        });
    }
    let mut seen = HashSet::new();
    for id in sample_ids {
        if !seen.insert(id) {
            return Err(DataError::DuplicateId(id.clone()));
        }
    }
    let mut order: Vec<usize> = (0..sample_ids.len()).collect();
    order.shuffle(&mut seed::rng(rng_seed));
    let mut assignment = vec![0usize; sample_ids.len()];
    for (pos, &idx) in order.iter().enumerate() {
        assignment[idx] = pos % k;
    }
    Ok(FoldPlan {
        k,
        ids: sample_ids.to_vec(),
        assignment,
    })
}
