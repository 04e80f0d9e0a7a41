//! Model validation: threshold binarization, pixel-wise confusion counts,
//! the accuracy/precision/recall/fall-out/trade-off metric set, ROC curves
//! with AUC, the k-fold cross-validation harness, and repeat-run statistics.

mod export;

pub use export::{metrics_csv, roc_svg, write_experiment_json, write_metrics_csv, write_roc_svg};

use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{make_folds, DataError, Sample};
use crate::seed;
use crate::types::{Image, LabelMap, ProbabilityMap, CLASS_POSITIVE};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("extent mismatch: prediction {pred_h}x{pred_w} vs ground truth {truth_h}x{truth_w}")]
    ExtentMismatch {
        pred_h: usize,
        pred_w: usize,
        truth_h: usize,
        truth_w: usize,
    },
    #[error("invalid threshold grid: {0}")]
    InvalidGrid(String),
    #[error("ground truth contains a single class; recall or fall-out is undefined")]
    SingleClassTruth,
    #[error("need at least {need} values, got {got}")]
    TooFewValues { need: usize, got: usize },
    #[error("fold {fold}: training failed: {detail}")]
    TrainFailed { fold: usize, detail: String },
    #[error("fold {fold}: prediction failed on sample {id}: {detail}")]
    PredictFailed {
        fold: usize,
        id: String,
        detail: String,
    },
    #[error(transparent)]
    Data(#[from] DataError),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Ordered binarization thresholds, all strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdGrid {
    thresholds: Vec<f64>,
}

impl ThresholdGrid {
    /// The nine equally spaced thresholds 0.1, 0.2, ..., 0.9.
    pub fn nine() -> Self {
        Self {
            thresholds: (1..=9).map(|i| i as f64 / 10.0).collect(),
        }
    }

    pub fn new(thresholds: Vec<f64>) -> Result<Self, EvalError> {
        if thresholds.is_empty() {
            return Err(EvalError::InvalidGrid("grid is empty".into()));
        }
        for w in thresholds.windows(2) {
            if w[1] <= w[0] {
                return Err(EvalError::InvalidGrid(format!(
                    "thresholds must be strictly increasing, got {} then {}",
                    w[0], w[1]
                )));
            }
        }
        if thresholds.iter().any(|&t| t <= 0.0 || t >= 1.0) {
            return Err(EvalError::InvalidGrid("thresholds must lie in (0, 1)".into()));
        }
        Ok(Self { thresholds })
    }

    pub fn thresholds(&self) -> &[f64] {
        &self.thresholds
    }

    pub fn len(&self) -> usize {
        self.thresholds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.thresholds.is_empty()
    }
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self::nine()
    }
}

/// Pixel counts of the four-way comparison between prediction and truth.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub true_pos: u64,
    pub false_pos: u64,
    pub true_neg: u64,
    pub false_neg: u64,
}

impl ConfusionCounts {
    pub fn new(true_pos: u64, false_pos: u64, true_neg: u64, false_neg: u64) -> Self {
        Self {
            true_pos,
            false_pos,
            true_neg,
            false_neg,
        }
    }

    pub fn total(&self) -> u64 {
        self.true_pos + self.false_pos + self.true_neg + self.false_neg
    }

    pub fn merge(&mut self, other: &ConfusionCounts) {
        self.true_pos += other.true_pos;
        self.false_pos += other.false_pos;
        self.true_neg += other.true_neg;
        self.false_neg += other.false_neg;
    }
}

/// Marks metrics whose denominator was zero and took the documented
/// convention value.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateFlags {
    pub precision: bool,
    pub recall: bool,
    pub fall_out: bool,
}

/// The four ratio metrics plus the recall/fall-out trade-off.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricSet {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub fall_out: f64,
    pub trade_off: f64,
    pub degenerate: DegenerateFlags,
}

/// Thresholds the probability map: a pixel is positive iff `p >= threshold`.
///
/// The comparison happens at the map's own precision, so a pixel exactly
/// equal to the threshold lands positive.
pub fn binarize(prob: &ProbabilityMap, threshold: f64) -> LabelMap {
    debug_assert!(threshold > 0.0 && threshold < 1.0);
    let t = threshold as f32;
    let data = prob.data().iter().map(|&p| u8::from(p >= t)).collect();
    LabelMap::from_vec(prob.height(), prob.width(), data).expect("binary by construction")
}

/// Pixel-wise comparison of a prediction against ground truth.
pub fn confusion(pred: &LabelMap, truth: &LabelMap) -> Result<ConfusionCounts, EvalError> {
    if pred.height() != truth.height() || pred.width() != truth.width() {
        return Err(EvalError::ExtentMismatch {
            pred_h: pred.height(),
            pred_w: pred.width(),
            truth_h: truth.height(),
            truth_w: truth.width(),
        });
    }
    let mut c = ConfusionCounts::default();
    for (&p, &t) in pred.data().iter().zip(truth.data()) {
        match (p == CLASS_POSITIVE, t == CLASS_POSITIVE) {
            (true, true) => c.true_pos += 1,
            (true, false) => c.false_pos += 1,
            (false, true) => c.false_neg += 1,
            (false, false) => c.true_neg += 1,
        }
    }
    Ok(c)
}

/// Evaluates the metric formulas on integer counts.
///
/// Degenerate denominators take documented conventions and are flagged:
/// precision 0 when nothing was predicted positive, recall 1 when there are
/// no positives to find, fall-out 0 when there are no negatives.
pub fn metrics(c: &ConfusionCounts) -> MetricSet {
    let mut flags = DegenerateFlags::default();
    let total = c.total();
    let accuracy = if total == 0 {
        0.0
    } else {
        (c.true_pos + c.true_neg) as f64 / total as f64
    };
    let precision = if c.true_pos + c.false_pos == 0 {
        flags.precision = true;
        0.0
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_pos) as f64
    };
    let recall = if c.true_pos + c.false_neg == 0 {
        flags.recall = true;
        1.0
    } else {
        c.true_pos as f64 / (c.true_pos + c.false_neg) as f64
    };
    let fall_out = if c.false_pos + c.true_neg == 0 {
        flags.fall_out = true;
        0.0
    } else {
        c.false_pos as f64 / (c.false_pos + c.true_neg) as f64
    };
    MetricSet {
        accuracy,
        precision,
        recall,
        fall_out,
        trade_off: (recall + (1.0 - fall_out)) / 2.0,
        degenerate: flags,
    }
}

/// One grid threshold with its pooled counts and metrics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ThresholdMetrics {
    pub threshold: f64,
    pub counts: ConfusionCounts,
    pub metrics: MetricSet,
}

/// Evaluates every grid threshold over pooled pixels (micro-averaging).
pub fn evaluate_thresholds(
    grid: &ThresholdGrid,
    pairs: &[(&ProbabilityMap, &LabelMap)],
) -> Result<Vec<ThresholdMetrics>, EvalError> {
    for (prob, truth) in pairs {
        if prob.height() != truth.height() || prob.width() != truth.width() {
            return Err(EvalError::ExtentMismatch {
                pred_h: prob.height(),
                pred_w: prob.width(),
                truth_h: truth.height(),
                truth_w: truth.width(),
            });
        }
    }
    grid.thresholds()
        .iter()
        .map(|&t| {
            let mut pooled = ConfusionCounts::default();
            for (prob, truth) in pairs {
                pooled.merge(&confusion(&binarize(prob, t), truth)?);
            }
            Ok(ThresholdMetrics {
                threshold: t,
                counts: pooled,
                metrics: metrics(&pooled),
            })
        })
        .collect()
}

/// How multiple test images combine into one curve point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RocAveraging {
    /// Pool all pixels before computing each point (the default).
    Micro,
    /// Compute per-image recall/fall-out and average them per threshold.
    Macro,
}

/// One operating point of the ROC curve.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fall_out: f64,
    pub recall: f64,
}

/// Recall against fall-out over the threshold grid, closed with the
/// synthetic endpoints (0,0) and (1,1), with trapezoidal AUC.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Trapezoid area under `(fall_out, recall)` points plus the (0,0)/(1,1)
/// endpoints, sorted by fall-out with ties broken by recall.
pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    let mut pts: Vec<(f64, f64)> = Vec::with_capacity(points.len() + 2);
    pts.push((0.0, 0.0));
    pts.extend_from_slice(points);
    pts.push((1.0, 1.0));
    pts.sort_by(|a, b| a.partial_cmp(b).expect("finite curve coordinates"));
    pts.windows(2)
        .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
        .sum()
}

/// Builds the ROC curve of a prediction set over the grid.
///
/// Requires at least one positive and one negative ground-truth pixel
/// overall; a single-class truth leaves recall or fall-out undefined.
pub fn roc(
    grid: &ThresholdGrid,
    pairs: &[(&ProbabilityMap, &LabelMap)],
    averaging: RocAveraging,
) -> Result<RocCurve, EvalError> {
    let positives: usize = pairs.iter().map(|(_, t)| t.positive_count()).sum();
    let total: usize = pairs.iter().map(|(_, t)| t.len()).sum();
    if positives == 0 || positives == total {
        return Err(EvalError::SingleClassTruth);
    }
    let points: Vec<RocPoint> = match averaging {
        RocAveraging::Micro => evaluate_thresholds(grid, pairs)?
            .into_iter()
            .map(|tm| RocPoint {
                threshold: tm.threshold,
                fall_out: tm.metrics.fall_out,
                recall: tm.metrics.recall,
            })
            .collect(),
        RocAveraging::Macro => grid
            .thresholds()
            .iter()
            .map(|&t| {
                let mut recall_sum = 0.0;
                let mut fall_out_sum = 0.0;
                for (prob, truth) in pairs {
                    let m = metrics(&confusion(&binarize(prob, t), truth)?);
                    recall_sum += m.recall;
                    fall_out_sum += m.fall_out;
                }
                let n = pairs.len() as f64;
                Ok(RocPoint {
                    threshold: t,
                    fall_out: fall_out_sum / n,
                    recall: recall_sum / n,
                })
            })
            .collect::<Result<_, EvalError>>()?,
    };
    let auc = trapezoid_auc(&points.iter().map(|p| (p.fall_out, p.recall)).collect::<Vec<_>>());
    Ok(RocCurve { points, auc })
}

/// Index and value of the best trade-off; ties go to the lower threshold.
pub fn optimal_threshold(per_threshold: &[MetricSet]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, m) in per_threshold.iter().enumerate() {
        match best {
            Some((_, b)) if m.trade_off <= b => {}
            _ => best = Some((i, m.trade_off)),
        }
    }
    best
}

/// Arithmetic mean and sample standard deviation (n-1 denominator).
pub fn aggregate_stats(values: &[f64]) -> Result<(f64, f64), EvalError> {
    if values.len() < 2 {
        return Err(EvalError::TooFewValues {
            need: 2,
            got: values.len(),
        });
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, var.sqrt()))
}

/// The study-case axes: data augmentation, learning rate, iterations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data_aug: bool,
    pub learning_rate: f64,
    pub iterations: usize,
}

/// Anything that maps an image to a probability map.
pub trait Segmenter {
    fn predict_map(&self, image: &Image) -> Result<ProbabilityMap, String>;
}

/// Trains one fold's model; implemented by the network trainer and by test
/// stubs.
pub trait FoldTrainer {
    type Model: Segmenter;
    fn train_fold(
        &self,
        train: &[&Sample],
        experiment: &ExperimentConfig,
        fold_seed: u64,
    ) -> Result<Self::Model, String>;
}

/// One fold's evaluation table plus the id bookkeeping that proves the
/// model never saw its test samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelEvaluation {
    pub fold: usize,
    pub train_ids: Vec<String>,
    pub test_ids: Vec<String>,
    pub table: Vec<ThresholdMetrics>,
}

/// Mean operating point across the fold models at one threshold.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct MeanPoint {
    pub threshold: f64,
    pub recall: f64,
    pub fall_out: f64,
    pub trade_off: f64,
}

/// Everything one experiment produces.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub config: ExperimentConfig,
    pub grid: ThresholdGrid,
    pub models: Vec<ModelEvaluation>,
    /// Per-threshold mean of the fold models' recall and fall-out.
    pub mean_curve: Vec<MeanPoint>,
    /// Trapezoidal AUC of the mean curve.
    pub auc: f64,
    pub optimal_index: usize,
    pub optimal_trade_off: f64,
}

/// Runs k-fold cross-validation: trains one model per fold on the other
/// folds, evaluates it on its own fold over the grid, and aggregates the
/// per-model tables into the experiment mean curve.
pub fn run_crossval<Tr: FoldTrainer>(
    samples: &[Sample],
    trainer: &Tr,
    experiment: &ExperimentConfig,
    grid: &ThresholdGrid,
    k: usize,
    rng_seed: u64,
) -> Result<ExperimentResult, EvalError> {
    let ids: Vec<String> = samples.iter().map(|s| s.id.clone()).collect();
    let plan = make_folds(&ids, k, seed::derive(rng_seed, "folds"))?;

    let mut models = Vec::with_capacity(k);
    for fold in 0..k {
        let test_ids: Vec<String> = plan.members(fold).iter().map(|s| s.to_string()).collect();
        let (train_samples, test_samples): (Vec<&Sample>, Vec<&Sample>) = samples
            .iter()
            .partition(|s| !test_ids.contains(&s.id));
        let train_ids: Vec<String> = train_samples.iter().map(|s| s.id.clone()).collect();

        let model = trainer
            .train_fold(
                &train_samples,
                experiment,
                seed::derive_indexed(rng_seed, "fold-train", fold as u64),
            )
            .map_err(|detail| EvalError::TrainFailed { fold, detail })?;

        let mut predictions = Vec::with_capacity(test_samples.len());
        for sample in &test_samples {
            let map = model
                .predict_map(&sample.image)
                .map_err(|detail| EvalError::PredictFailed {
                    fold,
                    id: sample.id.clone(),
                    detail,
                })?;
            predictions.push(map);
        }
        let pairs: Vec<(&ProbabilityMap, &LabelMap)> = predictions
            .iter()
            .zip(test_samples.iter())
            .map(|(p, s)| (p, &s.label))
            .collect();
        let table = evaluate_thresholds(grid, &pairs)?;
        models.push(ModelEvaluation {
            fold,
            train_ids,
            test_ids,
            table,
        });
    }

    let mean_curve: Vec<MeanPoint> = (0..grid.len())
        .map(|i| {
            let n = models.len() as f64;
            let recall = models.iter().map(|m| m.table[i].metrics.recall).sum::<f64>() / n;
            let fall_out = models.iter().map(|m| m.table[i].metrics.fall_out).sum::<f64>() / n;
            MeanPoint {
                threshold: grid.thresholds()[i],
                recall,
                fall_out,
                trade_off: (recall + (1.0 - fall_out)) / 2.0,
            }
        })
        .collect();
    let auc = trapezoid_auc(
        &mean_curve
            .iter()
            .map(|p| (p.fall_out, p.recall))
            .collect::<Vec<_>>(),
    );
    let (optimal_index, optimal_trade_off) = mean_curve
        .iter()
        .enumerate()
        .fold(None, |best: Option<(usize, f64)>, (i, p)| match best {
            Some((_, b)) if p.trade_off <= b => best,
            _ => Some((i, p.trade_off)),
        })
        .expect("grid is non-empty");

    Ok(ExperimentResult {
        config: *experiment,
        grid: grid.clone(),
        models,
        mean_curve,
        auc,
        optimal_index,
        optimal_trade_off,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{synth_dataset, SampleMeta, SetAssignment};

    fn map(h: usize, w: usize, values: Vec<f32>) -> ProbabilityMap {
        ProbabilityMap::from_vec(h, w, values).unwrap()
    }

    /// The hand-counted 10x10 fixture: tp=50, fp=10, tn=30, fn=10.
    fn hand_fixture() -> (LabelMap, LabelMap) {
        let mut truth = vec![0u8; 100];
        let mut pred = vec![0u8; 100];
        truth[..60].fill(1);
        pred[..50].fill(1);
        pred[60..70].fill(1);
        (
            LabelMap::from_vec(10, 10, pred).unwrap(),
            LabelMap::from_vec(10, 10, truth).unwrap(),
        )
    }

    #[test]
    fn grid_default_is_nine_tenths() {
        let grid = ThresholdGrid::default();
        let expected: Vec<f64> = (1..=9).map(|i| i as f64 / 10.0).collect();
        assert_eq!(grid.thresholds(), expected.as_slice());
        assert!(ThresholdGrid::new(vec![0.5, 0.5]).is_err());
        assert!(ThresholdGrid::new(vec![0.0, 0.5]).is_err());
        assert!(ThresholdGrid::new(vec![]).is_err());
    }

    #[test]
    fn binarize_constant_map() {
        let prob = ProbabilityMap::constant(4, 4, 0.7);
        assert_eq!(binarize(&prob, 0.5).positive_count(), 16);
        assert_eq!(binarize(&prob, 0.8).positive_count(), 0);
        // Boundary: p == t counts positive.
        assert_eq!(binarize(&prob, 0.7).positive_count(), 16);
    }

    #[test]
    fn binarize_is_monotone_in_threshold() {
        use rand::Rng;
        let mut rng = crate::seed::rng(31);
        for _ in 0..20 {
            let prob = map(8, 8, (0..64).map(|_| rng.gen::<f32>()).collect());
            let grid = ThresholdGrid::default();
            for w in grid.thresholds().windows(2) {
                let lo = binarize(&prob, w[0]);
                let hi = binarize(&prob, w[1]);
                for (a, b) in lo.data().iter().zip(hi.data()) {
                    assert!(b <= a, "positive set must shrink as threshold rises");
                }
            }
        }
    }

    #[test]
    fn confusion_perfect_and_inverted() {
        let (_, truth) = hand_fixture();
        let c = confusion(&truth, &truth).unwrap();
        assert_eq!((c.false_pos, c.false_neg), (0, 0));
        let inverted =
            LabelMap::from_vec(10, 10, truth.data().iter().map(|&v| 1 - v).collect()).unwrap();
        let c = confusion(&inverted, &truth).unwrap();
        assert_eq!((c.true_pos, c.true_neg), (0, 0));
    }

    #[test]
    fn confusion_hand_fixture() {
        let (pred, truth) = hand_fixture();
        let c = confusion(&pred, &truth).unwrap();
        assert_eq!(c, ConfusionCounts::new(50, 10, 30, 10));
        assert_eq!(c.total(), 100);
    }

    #[test]
    fn confusion_rejects_extent_mismatch() {
        let a = LabelMap::new(2, 2);
        let b = LabelMap::new(2, 3);
        assert!(matches!(confusion(&a, &b), Err(EvalError::ExtentMismatch { .. })));
    }

    #[test]
    fn metrics_hand_fixture_values() {
        let m = metrics(&ConfusionCounts::new(50, 10, 30, 10));
        assert!((m.accuracy - 0.80).abs() < 1e-12);
        assert!((m.precision - 5.0 / 6.0).abs() < 1e-12);
        assert!((m.recall - 5.0 / 6.0).abs() < 1e-12);
        assert!((m.fall_out - 0.25).abs() < 1e-12);
        assert!((m.trade_off - (5.0 / 6.0 + 0.75) / 2.0).abs() < 1e-12);
        assert_eq!(m.degenerate, DegenerateFlags::default());
    }

    #[test]
    fn metrics_perfect_counts() {
        let m = metrics(&ConfusionCounts::new(10, 0, 10, 0));
        assert_eq!(m.accuracy, 1.0);
        assert_eq!(m.precision, 1.0);
        assert_eq!(m.recall, 1.0);
        assert_eq!(m.fall_out, 0.0);
        assert_eq!(m.trade_off, 1.0);
    }

    #[test]
    fn metrics_degenerate_conventions() {
        let m = metrics(&ConfusionCounts::new(0, 0, 5, 3));
        assert_eq!(m.precision, 0.0);
        assert!(m.degenerate.precision);
        let m = metrics(&ConfusionCounts::new(0, 2, 5, 0));
        assert_eq!(m.recall, 1.0);
        assert!(m.degenerate.recall);
        let m = metrics(&ConfusionCounts::new(3, 0, 0, 2));
        assert_eq!(m.fall_out, 0.0);
        assert!(m.degenerate.fall_out);
    }

    #[test]
    fn roc_perfect_separation() {
        let prob = map(2, 2, vec![0.95, 0.95, 0.05, 0.05]);
        let truth = LabelMap::from_vec(2, 2, vec![1, 1, 0, 0]).unwrap();
        let curve = roc(&ThresholdGrid::default(), &[(&prob, &truth)], RocAveraging::Micro)
            .unwrap();
        for p in &curve.points {
            assert_eq!((p.fall_out, p.recall), (0.0, 1.0));
        }
        assert_eq!(curve.auc, 1.0);
    }

    #[test]
    fn roc_rejects_single_class_truth() {
        let prob = ProbabilityMap::constant(2, 2, 0.5);
        let truth = LabelMap::new(2, 2);
        assert!(matches!(
            roc(&ThresholdGrid::default(), &[(&prob, &truth)], RocAveraging::Micro),
            Err(EvalError::SingleClassTruth)
        ));
    }

    #[test]
    fn roc_matches_brute_force_trapezoid() {
        use rand::Rng;
        let grid = ThresholdGrid::default();
        for fixture in 0..3 {
            let mut rng = crate::seed::rng(100 + fixture);
            let prob = map(16, 16, (0..256).map(|_| rng.gen::<f32>()).collect());
            let truth = LabelMap::from_vec(
                16,
                16,
                (0..256).map(|_| rng.gen_range(0..2u8)).collect(),
            )
            .unwrap();
            let curve = roc(&grid, &[(&prob, &truth)], RocAveraging::Micro).unwrap();

            // Independent route: enumerate counts per threshold, then apply
            // the trapezoid directly.
            let mut pts = vec![(0.0f64, 0.0f64), (1.0, 1.0)];
            for &t in grid.thresholds() {
                let (mut tp, mut fp, mut tn, mut fneg) = (0u64, 0u64, 0u64, 0u64);
                for (i, &p) in prob.data().iter().enumerate() {
                    let pos = truth.data()[i] == 1;
                    match (p as f64 >= t, pos) {
                        (true, true) => tp += 1,
                        (true, false) => fp += 1,
                        (false, false) => tn += 1,
                        (false, true) => fneg += 1,
                    }
                }
                pts.push((
                    fp as f64 / (fp + tn) as f64,
                    tp as f64 / (tp + fneg) as f64,
                ));
            }
            pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let brute: f64 = pts
                .windows(2)
                .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
                .sum();
            assert_eq!(curve.auc, brute, "fixture {fixture}");
        }
    }

    #[test]
    fn roc_coordinates_monotone_with_falling_threshold() {
        use rand::Rng;
        let grid = ThresholdGrid::default();
        let mut rng = crate::seed::rng(7);
        for _ in 0..20 {
            let prob = map(12, 12, (0..144).map(|_| rng.gen::<f32>()).collect());
            let truth = LabelMap::from_vec(
                12,
                12,
                (0..144).map(|_| rng.gen_range(0..2u8)).collect(),
            )
            .unwrap();
            if !truth.has_both_classes() {
                continue;
            }
            let curve = roc(&grid, &[(&prob, &truth)], RocAveraging::Micro).unwrap();
            // Points are grid-ordered by rising threshold; walk them in
            // reverse so the threshold falls.
            for w in curve.points.windows(2) {
                assert!(w[0].recall >= w[1].recall - 1e-15);
                assert!(w[0].fall_out >= w[1].fall_out - 1e-15);
            }
        }
    }

    #[test]
    fn optimal_threshold_rules() {
        let m = |t: f64| MetricSet {
            accuracy: 0.0,
            precision: 0.0,
            recall: 0.0,
            fall_out: 0.0,
            trade_off: t,
            degenerate: DegenerateFlags::default(),
        };
        assert_eq!(optimal_threshold(&[m(0.4)]), Some((0, 0.4)));
        assert_eq!(optimal_threshold(&[m(0.7), m(0.9), m(0.9)]), Some((1, 0.9)));
        assert_eq!(optimal_threshold(&[]), None);
        // Argmax is shift invariant.
        let base = [m(0.2), m(0.8), m(0.5)];
        let shifted: Vec<MetricSet> = base.iter().map(|x| m(x.trade_off + 0.1)).collect();
        assert_eq!(
            optimal_threshold(&base).unwrap().0,
            optimal_threshold(&shifted).unwrap().0
        );
    }

    #[test]
    fn aggregate_stats_hand_values() {
        let (mean, std) = aggregate_stats(&[0.0, 1.0]).unwrap();
        assert!((mean - 0.5).abs() < 1e-15);
        assert!((std - (0.5f64).sqrt()).abs() < 1e-12);
        let (_, std) = aggregate_stats(&[0.3, 0.3, 0.3]).unwrap();
        assert_eq!(std, 0.0);
        assert!(matches!(
            aggregate_stats(&[1.0]),
            Err(EvalError::TooFewValues { need: 2, got: 1 })
        ));
        // Shift invariance.
        let base = [0.1, 0.4, 0.7];
        let shifted: Vec<f64> = base.iter().map(|v| v + 2.5).collect();
        let (m0, s0) = aggregate_stats(&base).unwrap();
        let (m1, s1) = aggregate_stats(&shifted).unwrap();
        assert!((m1 - (m0 + 2.5)).abs() < 1e-12);
        assert!((s1 - s0).abs() < 1e-12);
    }

    // ----- cross-validation harness -------------------------------------

    struct OracleStub;

    impl Segmenter for OracleLabelled {
        fn predict_map(&self, image: &Image) -> Result<ProbabilityMap, String> {
            // The synthetic generator paints positives dark (brightness
            // below 0.30) and sand bright (above 0.44), so a brightness
            // cut at 0.40 recovers the exact label.
            let mut data = Vec::with_capacity(image.height() * image.width());
            for y in 0..image.height() {
                for x in 0..image.width() {
                    let brightness = (0..3).map(|c| image.get(c, y, x)).sum::<f32>() / 3.0;
                    data.push(if brightness < 0.40 { 0.99 } else { 0.01 });
                }
            }
            Ok(ProbabilityMap::from_vec(image.height(), image.width(), data).unwrap())
        }
    }

    struct OracleLabelled;

    impl FoldTrainer for OracleStub {
        type Model = OracleLabelled;
        fn train_fold(
            &self,
            _train: &[&Sample],
            _experiment: &ExperimentConfig,
            _seed: u64,
        ) -> Result<Self::Model, String> {
            Ok(OracleLabelled)
        }
    }

    fn synth_samples(n: usize, seed: u64) -> Vec<Sample> {
        synth_dataset(n, 32, 32, 1.0, seed)
            .into_iter()
            .enumerate()
            .map(|(i, (image, label))| Sample {
                id: format!("s{i:03}"),
                image,
                label,
                meta: SampleMeta {
                    location: "synthetic".into(),
                    camera: "synthetic".into(),
                    set: SetAssignment::Mix,
                },
            })
            .collect()
    }

    fn experiment() -> ExperimentConfig {
        ExperimentConfig {
            data_aug: false,
            learning_rate: 1e-4,
            iterations: 1,
        }
    }

    #[test]
    fn crossval_minimal_two_folds() {
        let samples = synth_samples(2, 5);
        let result = run_crossval(
            &samples,
            &OracleStub,
            &experiment(),
            &ThresholdGrid::default(),
            2,
            1,
        )
        .unwrap();
        assert_eq!(result.models.len(), 2);
        for m in &result.models {
            assert_eq!(m.train_ids.len(), 1);
            assert_eq!(m.test_ids.len(), 1);
        }
    }

    #[test]
    fn crossval_oracle_stub_reaches_auc_one() {
        let samples = synth_samples(6, 8);
        let result = run_crossval(
            &samples,
            &OracleStub,
            &experiment(),
            &ThresholdGrid::default(),
            3,
            2,
        )
        .unwrap();
        assert_eq!(result.auc, 1.0);
        assert_eq!(result.optimal_trade_off, 1.0);
    }

    #[test]
    fn crossval_never_tests_on_training_samples() {
        let samples = synth_samples(11, 3);
        let result = run_crossval(
            &samples,
            &OracleStub,
            &experiment(),
            &ThresholdGrid::default(),
            4,
            9,
        )
        .unwrap();
        let mut all_test_ids = Vec::new();
        for m in &result.models {
            for id in &m.test_ids {
                assert!(!m.train_ids.contains(id), "{id} used for train and test");
                all_test_ids.push(id.clone());
            }
            assert_eq!(m.train_ids.len() + m.test_ids.len(), samples.len());
        }
        all_test_ids.sort();
        all_test_ids.dedup();
        assert_eq!(all_test_ids.len(), samples.len(), "folds must cover every sample");
    }

    #[test]
    fn crossval_mean_curve_is_hand_average() {
        let samples = synth_samples(4, 21);
        let result = run_crossval(
            &samples,
            &OracleStub,
            &experiment(),
            &ThresholdGrid::default(),
            2,
            7,
        )
        .unwrap();
        for (i, point) in result.mean_curve.iter().enumerate() {
            let recall =
                (result.models[0].table[i].metrics.recall + result.models[1].table[i].metrics.recall)
                    / 2.0;
            let fall_out = (result.models[0].table[i].metrics.fall_out
                + result.models[1].table[i].metrics.fall_out)
                / 2.0;
            assert_eq!(point.recall, recall);
            assert_eq!(point.fall_out, fall_out);
            assert_eq!(point.trade_off, (recall + (1.0 - fall_out)) / 2.0);
        }
    }
}
