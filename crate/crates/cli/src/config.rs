//! Config-file defaults and the resolved-config snapshot every run writes.

use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

/// Optional JSON defaults; any field a flag does not set falls back here.
#[derive(Debug, Default, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub seed: Option<u64>,
    pub count: Option<usize>,
    pub height: Option<usize>,
    pub width: Option<usize>,
    pub blob_scale: Option<f64>,
    pub lr: Option<f64>,
    pub iters: Option<usize>,
    pub data_aug: Option<bool>,
    pub width_divisor: Option<usize>,
    pub record_every: Option<usize>,
    pub folds: Option<usize>,
    pub grid: Option<String>,
    pub threshold: Option<f64>,
    pub altitude: Option<f64>,
    pub velocity: Option<f64>,
    pub image_height: Option<usize>,
    pub image_width: Option<usize>,
    pub focal: Option<f64>,
    pub duration: Option<f64>,
    pub rate: Option<f64>,
    pub latency_ms: Option<f64>,
    pub virtual_clock: Option<bool>,
    pub min_overlap: Option<f64>,
    pub framerate: Option<f64>,
}

impl FileConfig {
    pub fn load(path: Option<&Path>) -> anyhow::Result<Self> {
        match path {
            None => Ok(Self::default()),
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .with_context(|| format!("reading config file {}", p.display()))?;
                serde_json::from_str(&text)
                    .with_context(|| format!("parsing config file {}", p.display()))
            }
        }
    }
}

/// Writes the fully resolved configuration of a run next to its outputs,
/// so the run can be replayed from the snapshot alone.
pub fn write_snapshot<T: Serialize>(out_dir: &Path, snapshot: &T) -> anyhow::Result<()> {
    let path = out_dir.join("config.json");
    let json = serde_json::to_string_pretty(snapshot).context("serializing config snapshot")?;
    std::fs::write(&path, json + "\n")
        .with_context(|| format!("writing config snapshot {}", path.display()))
}

/// Parses a comma-separated threshold grid override.
pub fn parse_grid(
    spec: Option<&str>,
) -> anyhow::Result<poseg_core::evaluation::ThresholdGrid> {
    match spec {
        None => Ok(poseg_core::evaluation::ThresholdGrid::default()),
        Some(text) => {
            let values: Vec<f64> = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad threshold '{s}'"))
                })
                .collect::<anyhow::Result<_>>()?;
            poseg_core::evaluation::ThresholdGrid::new(values).map_err(Into::into)
        }
    }
}
