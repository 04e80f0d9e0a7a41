//! `poseg evaluate`: run a frozen model over a dataset, export the
//! per-threshold metrics table and the error overlays at the optimal
//! threshold.

use anyhow::{bail, Context};
use serde::Serialize;

use poseg_core::analysis::error_overlay;
use poseg_core::data::{write_ppm, SetAssignment};
use poseg_core::evaluation::{
    binarize, evaluate_thresholds, optimal_threshold, roc, write_metrics_csv, RocAveraging,
    ThresholdMetrics,
};
use poseg_core::network::load_frozen;
use poseg_core::types::{LabelMap, ProbabilityMap};

use super::{ensure_dir, load_samples};
use crate::config::{parse_grid, write_snapshot, FileConfig};
use crate::EvaluateArgs;

#[derive(Serialize)]
struct Snapshot {
    command: &'static str,
    seed: u64,
    model: String,
    manifest: String,
    set: String,
    grid: Vec<f64>,
}

#[derive(Serialize)]
struct Evaluation {
    auc: f64,
    optimal_threshold: f64,
    optimal_trade_off: f64,
    table: Vec<ThresholdMetrics>,
}

pub fn run(args: EvaluateArgs, file: &FileConfig, seed: u64) -> anyhow::Result<()> {
    let grid = parse_grid(args.grid.as_deref().or(file.grid.as_deref()))?;
    let filter = match args.set.as_str() {
        "mix" => Some(SetAssignment::Mix),
        "extra" => Some(SetAssignment::Extra),
        "all" => None,
        other => bail!("unknown set '{other}': expected mix, extra or all"),
    };

    let model = load_frozen(&args.model)
        .with_context(|| format!("loading frozen model {}", args.model.display()))?;
    let samples = load_samples(&args.manifest, filter)?;
    if samples.is_empty() {
        bail!("no samples to evaluate in set '{}'", args.set);
    }
    ensure_dir(&args.out)?;

    let predictions: Vec<ProbabilityMap> = samples
        .iter()
        .map(|s| {
            model
                .predict(&s.image)
                .with_context(|| format!("predicting sample {}", s.id))
        })
        .collect::<anyhow::Result<_>>()?;
    let pairs: Vec<(&ProbabilityMap, &LabelMap)> = predictions
        .iter()
        .zip(samples.iter())
        .map(|(p, s)| (p, &s.label))
        .collect();

    let table = evaluate_thresholds(&grid, &pairs)?;
    write_metrics_csv(&args.out.join("metrics.csv"), &table)?;

    let curve = roc(&grid, &pairs, RocAveraging::Micro).context("building ROC curve")?;
    let metric_sets: Vec<_> = table.iter().map(|t| t.metrics).collect();
    let (optimal_index, optimal_trade_off) =
        optimal_threshold(&metric_sets).expect("grid is non-empty");
    let best_threshold = grid.thresholds()[optimal_index];

    let overlays = args.out.join("overlays");
    ensure_dir(&overlays)?;
    for (sample, prediction) in samples.iter().zip(&predictions) {
        let mask = binarize(prediction, best_threshold);
        let overlay = error_overlay(&sample.image, &mask, &sample.label)?;
        write_ppm(&overlays.join(format!("{}.ppm", sample.id)), &overlay)?;
    }

    let evaluation = Evaluation {
        auc: curve.auc,
        optimal_threshold: best_threshold,
        optimal_trade_off,
        table,
    };
    std::fs::write(
        args.out.join("evaluation.json"),
        serde_json::to_string_pretty(&evaluation)? + "\n",
    )
    .context("writing evaluation.json")?;

    write_snapshot(
        &args.out,
        &Snapshot {
            command: "evaluate",
            seed,
            model: args.model.display().to_string(),
            manifest: args.manifest.display().to_string(),
            set: args.set,
            grid: grid.thresholds().to_vec(),
        },
    )?;

    println!(
        "evaluated {} samples: AUC {:.4}, optimal threshold {best_threshold:.2} \
         (trade-off {optimal_trade_off:.4}); outputs in {}",
        samples.len(),
        curve.auc,
        args.out.display()
    );
    Ok(())
}
