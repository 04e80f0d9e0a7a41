//! `poseg train`: train on the manifest's mix set and freeze the model.

use std::fmt::Write as _;

use anyhow::{bail, Context};
use serde::Serialize;

use poseg_core::data::SetAssignment;
use poseg_core::network::{
    build_model, freeze, padded_extent, train, NetworkConfig, TrainOptions,
};
use poseg_core::seed;
use poseg_core::types::{Image, LabelMap};

use super::{ensure_dir, load_samples};
use crate::config::{write_snapshot, FileConfig};
use crate::TrainArgs;

#[derive(Serialize)]
struct Snapshot {
    command: &'static str,
    seed: u64,
    manifest: String,
    learning_rate: f64,
    iterations: usize,
    data_aug: bool,
    width_divisor: usize,
    record_every: usize,
    network: NetworkConfig,
}

pub fn run(args: TrainArgs, file: &FileConfig, seed: u64) -> anyhow::Result<()> {
    let lr = args.lr.or(file.lr).unwrap_or(1e-4);
    let iters = args.iters.or(file.iters).unwrap_or(1000);
    let data_aug = args.data_aug || file.data_aug.unwrap_or(false);
    let width_divisor = args.width_divisor.or(file.width_divisor).unwrap_or(8);
    let record_every = args.record_every.or(file.record_every).unwrap_or(10);

    let samples = load_samples(&args.manifest, Some(SetAssignment::Mix))?;
    if samples.is_empty() {
        bail!("manifest has no samples in the mix set");
    }
    let config = NetworkConfig::with_divisor(
        padded_extent(samples[0].image.height()),
        padded_extent(samples[0].image.width()),
        width_divisor,
    );
    ensure_dir(&args.out)?;

    let mut model =
        build_model::<f32>(&config, seed::derive(seed, "init")).context("building model")?;
    let pairs: Vec<(Image, LabelMap)> = samples
        .into_iter()
        .map(|s| (s.image, s.label))
        .collect();
    let options = TrainOptions {
        learning_rate: lr,
        iterations: iters,
        data_aug,
        augmentation: Default::default(),
        record_every,
    };
    let records =
        train(&mut model, &pairs, &options, seed::derive(seed, "train")).context("training")?;

    let model_path = args.out.join("model.poseg");
    freeze(&model, &model_path).context("freezing model")?;

    let mut csv = String::from("iteration,loss\n");
    for r in &records {
        writeln!(csv, "{},{}", r.iteration, r.loss).expect("in-memory write");
    }
    std::fs::write(args.out.join("loss.csv"), csv).context("writing loss.csv")?;

    write_snapshot(
        &args.out,
        &Snapshot {
            command: "train",
            seed,
            manifest: args.manifest.display().to_string(),
            learning_rate: lr,
            iterations: iters,
            data_aug,
            width_divisor,
            record_every,
            network: config,
        },
    )?;

    let first = records.first().map(|r| r.loss).unwrap_or(f64::NAN);
    let last = records.last().map(|r| r.loss).unwrap_or(f64::NAN);
    println!(
        "trained {iters} iterations ({} recorded losses): loss {first:.4} -> {last:.4}; model at {}",
        records.len(),
        model_path.display()
    );
    Ok(())
}
