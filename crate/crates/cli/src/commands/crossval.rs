//! `poseg crossval`: k-fold cross-validation over the manifest's mix set.

use anyhow::{bail, Context};
use serde::Serialize;

use poseg_core::data::SetAssignment;
use poseg_core::evaluation::{
    run_crossval, write_experiment_json, write_metrics_csv, write_roc_svg, ExperimentConfig,
};
use poseg_core::network::FcnTrainer;
use poseg_core::seed;

use super::{ensure_dir, load_samples};
use crate::config::{parse_grid, write_snapshot, FileConfig};
use crate::CrossvalArgs;

#[derive(Serialize)]
struct Snapshot {
    command: &'static str,
    seed: u64,
    manifest: String,
    folds: usize,
    experiment: ExperimentConfig,
    width_divisor: usize,
    grid: Vec<f64>,
}

pub fn run(args: CrossvalArgs, file: &FileConfig, seed: u64) -> anyhow::Result<()> {
    let folds = args.folds.or(file.folds).unwrap_or(5);
    let experiment = ExperimentConfig {
        data_aug: args.data_aug || file.data_aug.unwrap_or(false),
        learning_rate: args.lr.or(file.lr).unwrap_or(1e-4),
        iterations: args.iters.or(file.iters).unwrap_or(1000),
    };
    let width_divisor = args.width_divisor.or(file.width_divisor).unwrap_or(8);
    let grid = parse_grid(args.grid.as_deref().or(file.grid.as_deref()))?;

    let samples = load_samples(&args.manifest, Some(SetAssignment::Mix))?;
    if samples.len() < folds {
        bail!("need at least {folds} mix samples, manifest has {}", samples.len());
    }
    ensure_dir(&args.out)?;

    let trainer = FcnTrainer::new(width_divisor);
    let result = run_crossval(
        &samples,
        &trainer,
        &experiment,
        &grid,
        folds,
        seed::derive(seed, "crossval"),
    )
    .context("cross-validation")?;

    write_experiment_json(&args.out.join("summary.json"), &result)?;
    for model in &result.models {
        write_metrics_csv(
            &args.out.join(format!("model_{}.csv", model.fold)),
            &model.table,
        )?;
    }
    write_roc_svg(&args.out.join("roc.svg"), &result)?;

    write_snapshot(
        &args.out,
        &Snapshot {
            command: "crossval",
            seed,
            manifest: args.manifest.display().to_string(),
            folds,
            experiment,
            width_divisor,
            grid: grid.thresholds().to_vec(),
        },
    )?;

    println!(
        "cross-validated {} folds on {} samples: mean-curve AUC {:.4}, optimal threshold {:.2} \
         (trade-off {:.4}); outputs in {}",
        folds,
        samples.len(),
        result.auc,
        grid.thresholds()[result.optimal_index],
        result.optimal_trade_off,
        args.out.display()
    );
    Ok(())
}
