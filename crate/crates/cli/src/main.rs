//! `poseg` — command-line front door for the seagrass segmentation
//! toolkit: dataset generation, training, cross-validation, evaluation,
//! uncertainty analysis and the online pipeline simulator.
//!
//! Every run is reproducible: all randomness funnels through `--seed`, and
//! each run writes a resolved-config snapshot (`config.json`) next to its
//! outputs. Value precedence is command line > `POSEG_*` environment
//! variables > `--config` JSON file > built-in defaults.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{ArgAction, Parser, Subcommand};

use config::FileConfig;

#[derive(Parser)]
#[command(
    name = "poseg",
    version,
    about = "Seagrass meadow segmentation: synthesize data, train, validate, analyze, simulate"
)]
struct Cli {
    /// Master seed for all randomized behavior.
    #[arg(long, global = true, env = "POSEG_SEED")]
    seed: Option<u64>,

    /// JSON config file supplying defaults for any flag.
    #[arg(long, global = true, env = "POSEG_CONFIG")]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a seeded synthetic dataset (PPM/PGM pairs plus manifest).
    Synth(SynthArgs),
    /// Train a model on a manifest and freeze it.
    Train(TrainArgs),
    /// Run k-fold cross-validation and export the experiment summary.
    Crossval(CrossvalArgs),
    /// Evaluate a frozen model over the threshold grid.
    Evaluate(EvaluateArgs),
    /// Annotator and network uncertainty analysis.
    Analyze(AnalyzeArgs),
    /// Simulate the online two-stage segmentation pipeline.
    Simulate(SimulateArgs),
}

#[derive(clap::Args)]
struct SynthArgs {
    /// Number of image/label pairs.
    #[arg(long)]
    count: Option<usize>,
    /// Image height in pixels.
    #[arg(long)]
    height: Option<usize>,
    /// Image width in pixels.
    #[arg(long)]
    width: Option<usize>,
    /// Relative size of the seagrass blobs.
    #[arg(long)]
    blob_scale: Option<f64>,
    /// Output directory.
    #[arg(long, env = "POSEG_OUT")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct TrainArgs {
    /// Dataset manifest (JSON).
    #[arg(long, env = "POSEG_MANIFEST")]
    manifest: PathBuf,
    /// Learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Training iterations.
    #[arg(long)]
    iters: Option<usize>,
    /// Apply brightness/contrast augmentation to training draws.
    #[arg(long, action = ArgAction::SetTrue)]
    data_aug: bool,
    /// Channel-width divisor applied to the full-scale architecture.
    #[arg(long)]
    width_divisor: Option<usize>,
    /// Record the loss every this many iterations.
    #[arg(long)]
    record_every: Option<usize>,
    /// Output directory.
    #[arg(long, env = "POSEG_OUT")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct CrossvalArgs {
    #[arg(long, env = "POSEG_MANIFEST")]
    manifest: PathBuf,
    /// Fold count.
    #[arg(long)]
    folds: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long, action = ArgAction::SetTrue)]
    data_aug: bool,
    #[arg(long)]
    width_divisor: Option<usize>,
    /// Comma-separated binarization thresholds in (0,1).
    #[arg(long)]
    grid: Option<String>,
    #[arg(long, env = "POSEG_OUT")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct EvaluateArgs {
    /// Frozen model file.
    #[arg(long)]
    model: PathBuf,
    #[arg(long, env = "POSEG_MANIFEST")]
    manifest: PathBuf,
    /// Comma-separated binarization thresholds in (0,1).
    #[arg(long)]
    grid: Option<String>,
    /// Which manifest subset to evaluate: mix, extra or all.
    #[arg(long, default_value = "all")]
    set: String,
    #[arg(long, env = "POSEG_OUT")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct AnalyzeArgs {
    /// Network probability map (gray PGM, 0..255 maps to 0..1).
    #[arg(long)]
    pred: PathBuf,
    /// Ground-truth label map (PGM, white positive).
    #[arg(long)]
    truth: PathBuf,
    /// Original image for the error overlay (PPM).
    #[arg(long)]
    image: Option<PathBuf>,
    /// Annotator label maps (two or more enable annotator analysis).
    #[arg(long, num_args = 1..)]
    annotators: Vec<PathBuf>,
    /// Binarization threshold for the error analysis.
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long, env = "POSEG_OUT")]
    out: PathBuf,
}

#[derive(clap::Args)]
struct SimulateArgs {
    /// Frozen model; a fixed-latency stub segmenter runs when omitted.
    #[arg(long)]
    model: Option<PathBuf>,
    /// Navigation altitude in meters.
    #[arg(long)]
    altitude: Option<f64>,
    /// Vehicle velocity in meters per second.
    #[arg(long)]
    velocity: Option<f64>,
    /// Image height in pixels (preprocess target and footprint h_image).
    #[arg(long)]
    image_height: Option<usize>,
    /// Image width in pixels (preprocess target).
    #[arg(long)]
    image_width: Option<usize>,
    /// Focal length in pixels.
    #[arg(long)]
    focal: Option<f64>,
    /// Run duration in seconds.
    #[arg(long)]
    duration: Option<f64>,
    /// Camera frame rate in frames per second.
    #[arg(long)]
    rate: Option<f64>,
    /// Segmentation latency in milliseconds (stub latency; also the
    /// virtual-clock cost per frame).
    #[arg(long)]
    latency_ms: Option<f64>,
    /// Run single-threaded under the deterministic virtual clock.
    #[arg(long, action = ArgAction::SetTrue)]
    virtual_clock: bool,
    /// Minimum acceptable footprint overlap.
    #[arg(long)]
    min_overlap: Option<f64>,
    /// Force this framerate in the overlap report instead of the achieved
    /// one.
    #[arg(long)]
    framerate: Option<f64>,
    /// Write each segmented probability map as a PGM.
    #[arg(long, action = ArgAction::SetTrue)]
    save_maps: bool,
    #[arg(long, env = "POSEG_OUT")]
    out: PathBuf,
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    let file_config = FileConfig::load(cli.config.as_deref())?;
    let seed = cli.seed.or(file_config.seed).unwrap_or(0);
    match cli.command {
        Command::Synth(args) => commands::synth::run(args, &file_config, seed),
        Command::Train(args) => commands::train::run(args, &file_config, seed),
        Command::Crossval(args) => commands::crossval::run(args, &file_config, seed),
        Command::Evaluate(args) => commands::evaluate::run(args, &file_config, seed),
        Command::Analyze(args) => commands::analyze::run(args, &file_config, seed),
        Command::Simulate(args) => commands::simulate::run(args, &file_config, seed),
    }
}
