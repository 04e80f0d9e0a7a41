//! `poseg synth`: write a seeded synthetic dataset plus its manifest.

use anyhow::Context;
use serde::Serialize;

use poseg_core::data::{
    synth_dataset, write_pgm_label, write_ppm, DatasetManifest, ManifestEntry, SetAssignment,
};

use super::ensure_dir;
use crate::config::{write_snapshot, FileConfig};
use crate::SynthArgs;

#[derive(Serialize)]
struct Snapshot {
    command: &'static str,
    seed: u64,
    count: usize,
    height: usize,
    width: usize,
    blob_scale: f64,
}

pub fn run(args: SynthArgs, file: &FileConfig, seed: u64) -> anyhow::Result<()> {
    let count = args.count.or(file.count).unwrap_or(20);
    let height = args.height.or(file.height).unwrap_or(64);
    let width = args.width.or(file.width).unwrap_or(96);
    let blob_scale = args.blob_scale.or(file.blob_scale).unwrap_or(1.0);

    ensure_dir(&args.out)?;
    ensure_dir(&args.out.join("images"))?;
    ensure_dir(&args.out.join("labels"))?;

    let samples = synth_dataset(count, height, width, blob_scale, seed);
    let mut entries = Vec::with_capacity(count);
    for (i, (image, label)) in samples.iter().enumerate() {
        let id = format!("s{i:04}");
        let image_rel = format!("images/{id}.ppm");
        let label_rel = format!("labels/{id}.pgm");
        write_ppm(&args.out.join(&image_rel), image).context("writing image")?;
        write_pgm_label(&args.out.join(&label_rel), label).context("writing label")?;
        entries.push(ManifestEntry {
            id,
            image: image_rel.into(),
            label: label_rel.into(),
            location: "synthetic".into(),
            camera: "synthetic".into(),
            set: SetAssignment::Mix,
        });
    }
    let manifest = DatasetManifest::new(entries, args.out.clone())?;
    manifest.save(&args.out.join("manifest.json"))?;

    write_snapshot(
        &args.out,
        &Snapshot {
            command: "synth",
            seed,
            count,
            height,
            width,
            blob_scale,
        },
    )?;
    println!(
        "wrote {count} {height}x{width} sample pairs and manifest.json to {}",
        args.out.display()
    );
    Ok(())
}
