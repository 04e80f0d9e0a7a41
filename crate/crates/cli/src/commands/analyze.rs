//! `poseg analyze`: annotator mean/uncertainty maps, network uncertainty,
//! the error overlay and the error-in-uncertainty fractions.

use anyhow::Context;
use serde::Serialize;

use poseg_core::analysis::{
    annotator_mean, annotator_uncertainty, error_in_uncertainty_fraction, error_overlay,
    network_uncertainty, AnnotatorSet,
};
use poseg_core::data::{read_pgm_gray, read_pgm_label, read_ppm, write_pgm_gray, write_ppm};
use poseg_core::evaluation::binarize;
use poseg_core::types::ProbabilityMap;

use super::ensure_dir;
use crate::config::{write_snapshot, FileConfig};
use crate::AnalyzeArgs;

#[derive(Serialize)]
struct Snapshot {
    command: &'static str,
    seed: u64,
    pred: String,
    truth: String,
    annotators: Vec<String>,
    threshold: f64,
}

#[derive(Serialize)]
struct Fractions {
    threshold: f64,
    misclassified_pixels: usize,
    network_uncertainty_area: f64,
    error_in_network_uncertainty: f64,
    error_in_network_uncertainty_degenerate: bool,
    annotator_uncertainty_area: Option<f64>,
    error_in_annotator_uncertainty: Option<f64>,
    error_in_annotator_uncertainty_degenerate: Option<bool>,
}

pub fn run(args: AnalyzeArgs, file: &FileConfig, seed: u64) -> anyhow::Result<()> {
    let threshold = args.threshold.or(file.threshold).unwrap_or(0.5);
    ensure_dir(&args.out)?;

    let (h, w, gray) = read_pgm_gray(&args.pred)
        .with_context(|| format!("reading prediction map {}", args.pred.display()))?;
    let prob = ProbabilityMap::from_vec(h, w, gray).context("prediction map range")?;
    let truth = read_pgm_label(&args.truth)
        .with_context(|| format!("reading ground truth {}", args.truth.display()))?;
    let pred_label = binarize(&prob, threshold);

    let net_unc = network_uncertainty(&prob);
    write_pgm_gray(
        &args.out.join("network_uncertainty.pgm"),
        net_unc.height(),
        net_unc.width(),
        &net_unc.to_gray(),
    )?;
    let net_fraction = error_in_uncertainty_fraction(&pred_label, &truth, &net_unc)?;

    let mut annotator_area = None;
    let mut annotator_fraction = None;
    let mut annotator_degenerate = None;
    if !args.annotators.is_empty() {
        let maps = args
            .annotators
            .iter()
            .map(|p| {
                read_pgm_label(p).with_context(|| format!("reading annotator map {}", p.display()))
            })
            .collect::<anyhow::Result<Vec<_>>>()?;
        let set = AnnotatorSet::new(maps).context("annotator set")?;
        let mean = annotator_mean(&set);
        write_pgm_gray(
            &args.out.join("annotator_mean.pgm"),
            set.height(),
            set.width(),
            &mean,
        )?;
        let unc = annotator_uncertainty(&set);
        write_pgm_gray(
            &args.out.join("annotator_uncertainty.pgm"),
            unc.height(),
            unc.width(),
            &unc.to_gray(),
        )?;
        let fraction = error_in_uncertainty_fraction(&pred_label, &truth, &unc)?;
        annotator_area = Some(unc.area_fraction());
        annotator_fraction = Some(fraction.fraction);
        annotator_degenerate = Some(fraction.degenerate);
    }

    if let Some(image_path) = &args.image {
        let image = read_ppm(image_path)
            .with_context(|| format!("reading image {}", image_path.display()))?;
        let overlay = error_overlay(&image, &pred_label, &truth)?;
        write_ppm(&args.out.join("error_overlay.ppm"), &overlay)?;
    }

    let fractions = Fractions {
        threshold,
        misclassified_pixels: net_fraction.misclassified,
        network_uncertainty_area: net_unc.area_fraction(),
        error_in_network_uncertainty: net_fraction.fraction,
        error_in_network_uncertainty_degenerate: net_fraction.degenerate,
        annotator_uncertainty_area: annotator_area,
        error_in_annotator_uncertainty: annotator_fraction,
        error_in_annotator_uncertainty_degenerate: annotator_degenerate,
    };
    std::fs::write(
        args.out.join("fractions.json"),
        serde_json::to_string_pretty(&fractions)? + "\n",
    )
    .context("writing fractions.json")?;

    write_snapshot(
        &args.out,
        &Snapshot {
            command: "analyze",
            seed,
            pred: args.pred.display().to_string(),
            truth: args.truth.display().to_string(),
            annotators: args.annotators.iter().map(|p| p.display().to_string()).collect(),
            threshold,
        },
    )?;

    println!(
        "network uncertainty covers {:.1}% of the image; {:.1}% of misclassified pixels fall inside it{}",
        100.0 * fractions.network_uncertainty_area,
        100.0 * fractions.error_in_network_uncertainty,
        match annotator_area {
            Some(a) => format!(
                "; annotator uncertainty covers {:.1}% (error fraction {:.1}%)",
                100.0 * a,
                100.0 * annotator_fraction.unwrap_or(f64::NAN)
            ),
            None => String::new(),
        }
    );
    Ok(())
}
