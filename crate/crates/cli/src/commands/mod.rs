pub mod analyze;
pub mod crossval;
pub mod evaluate;
pub mod simulate;
pub mod synth;
pub mod train;

use std::path::Path;

use anyhow::Context;
use poseg_core::data::{load_dataset, DatasetManifest, Sample, SetAssignment};

pub(crate) fn ensure_dir(path: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(path)
        .with_context(|| format!("creating output directory {}", path.display()))
}

/// Loads the manifest's samples, optionally filtered to one set.
pub(crate) fn load_samples(
    manifest_path: &Path,
    filter: Option<SetAssignment>,
) -> anyhow::Result<Vec<Sample>> {
    let manifest = DatasetManifest::load(manifest_path)
        .with_context(|| format!("loading manifest {}", manifest_path.display()))?;
    let samples = load_dataset(&manifest).context("loading dataset")?;
    Ok(match filter {
        None => samples,
        Some(set) => samples.into_iter().filter(|s| s.meta.set == set).collect(),
    })
}
