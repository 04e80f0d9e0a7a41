//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the measured values once its assertions hold.

use poseg_core::analysis::{
    annotator_uncertainty, error_in_uncertainty_fraction, network_uncertainty, AnnotatorSet,
    UncertaintyMap,
};
use poseg_core::data::{make_folds, synth_dataset, Sample, SampleMeta, SetAssignment};
use poseg_core::evaluation::{
    binarize, confusion, metrics, roc, run_crossval, ConfusionCounts, ExperimentConfig,
    FoldTrainer, RocAveraging, Segmenter, ThresholdGrid,
};
use poseg_core::network::{build_model, freeze, load_frozen, train, NetworkConfig, TrainOptions};
use poseg_core::numerics::{
    bilinear_kernel, conv2d, conv2d_backward, cross_entropy, dropout, dropout_backward,
    grad_check, maxpool2d, maxpool2d_backward, relu, relu_backward, softmax_2class,
    transposed_conv2d, transposed_conv2d_backward, Tensor,
};
use poseg_core::pipeline::{
    overlap_report, run_pipeline, PipelineConfig, RunMode, RunOptions, SimulatedSource,
    StubSegmenter,
};
use poseg_core::seed::rng;
use poseg_core::types::{Image, LabelMap, ProbabilityMap};
use rand::Rng;

/// Criterion 1: the footprint/displacement/overlap chain reproduces the
/// 34.0% survey overlap at the published operating point.
#[test]
fn criterion_01_overlap_reproduction() {
    let report = overlap_report(2.5, 0.4, 0.42, 360.0, 623.3).unwrap();
    let delta_pp = (report.overlap - 0.340).abs() * 100.0;
    assert!(
        delta_pp <= 0.1,
        "overlap {:.6} is {delta_pp:.3} pp away from 34.0%",
        report.overlap
    );
    println!(
        "acceptance 1 (overlap reproduction): PASS — overlap {:.4} = 34.0% +/- 0.1pp",
        report.overlap
    );
}

/// Criterion 2: the metric formulas match exact rational arithmetic on
/// hand-constructed confusion fixtures.
#[test]
fn criterion_02_metric_exactness() {
    // (tp, fp, tn, fn)
    let fixtures: [(u64, u64, u64, u64); 21] = [
        (50, 10, 30, 10),
        (1, 0, 0, 0),
        (0, 0, 1, 0),
        (1, 1, 1, 1),
        (3, 2, 5, 7),
        (10, 0, 10, 0),
        (0, 5, 5, 0),
        (7, 3, 9, 1),
        (100, 1, 1, 100),
        (2, 8, 16, 4),
        (33, 11, 22, 44),
        (5, 0, 0, 5),
        (0, 0, 7, 3),
        (12, 13, 14, 15),
        (999, 1, 999, 1),
        (1, 999, 1, 999),
        (60, 40, 0, 0),
        (0, 0, 0, 9),
        (17, 19, 23, 29),
        (256, 64, 128, 32),
        (1000000, 3, 999997, 7),
    ];
    let ratio = |num: u64, den: u64, degenerate_value: f64| {
        if den == 0 {
            degenerate_value
        } else {
            num as f64 / den as f64
        }
    };
    for &(tp, fp, tn, fneg) in &fixtures {
        let m = metrics(&ConfusionCounts::new(tp, fp, tn, fneg));
        let accuracy = ratio(tp + tn, tp + fp + tn + fneg, 0.0);
        let precision = ratio(tp, tp + fp, 0.0);
        let recall = ratio(tp, tp + fneg, 1.0);
        let fall_out = ratio(fp, fp + tn, 0.0);
        let trade_off = (recall + (1.0 - fall_out)) / 2.0;
        for (name, got, want) in [
            ("accuracy", m.accuracy, accuracy),
            ("precision", m.precision, precision),
            ("recall", m.recall, recall),
            ("fall_out", m.fall_out, fall_out),
            ("trade_off", m.trade_off, trade_off),
        ] {
            assert!(
                (got - want).abs() <= 1e-12,
                "({tp},{fp},{tn},{fneg}) {name}: {got} vs exact {want}"
            );
        }
    }
    // The named fixture's rounded values.
    let m = metrics(&ConfusionCounts::new(50, 10, 30, 10));
    assert!((m.accuracy - 0.80).abs() < 1e-12);
    assert!((m.precision - 0.8333).abs() < 5e-5);
    assert!((m.recall - 0.8333).abs() < 5e-5);
    assert!((m.fall_out - 0.25).abs() < 1e-12);
    assert!((m.trade_off - 0.7917).abs() < 5e-5);
    println!(
        "acceptance 2 (metric exactness): PASS — {} fixtures within 1e-12",
        fixtures.len()
    );
}

fn random_tensor(shape: [usize; 4], seed: u64) -> Tensor<f64> {
    let mut r = rng(seed);
    let n: usize = shape.iter().product();
    Tensor::from_vec(shape, (0..n).map(|_| r.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Criterion 3: every layer and the end-to-end toy network satisfy central
/// finite-difference checks at 64-bit.
#[test]
fn criterion_03_gradient_fidelity() {
    const H: f64 = 1e-5;
    let mut worst_layer = 0.0f64;

    // conv2d: input, kernel and bias gradients.
    {
        let x = random_tensor([1, 2, 5, 5], 301);
        let k = random_tensor([3, 2, 3, 3], 302);
        let b: Vec<f64> = random_tensor([3, 1, 1, 1], 303).data().to_vec();
        let w = random_tensor(conv2d(&x, &k, &b, 1, 1).unwrap().shape(), 304);
        let g = conv2d_backward(&x, &k, 1, 1, &w).unwrap();
        let r = grad_check(
            &mut |t| conv2d(t, &k, &b, 1, 1).unwrap().dot(&w).unwrap(),
            &x,
            &g.input,
            H,
            1e-4,
        );
        assert!(r.pass, "conv input: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
        let r = grad_check(
            &mut |t| conv2d(&x, t, &b, 1, 1).unwrap().dot(&w).unwrap(),
            &k,
            &g.kernel,
            H,
            1e-4,
        );
        assert!(r.pass, "conv kernel: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
    }
    // relu, away from the kink.
    {
        let mut x = random_tensor([1, 1, 5, 5], 305);
        for v in x.data_mut() {
            if v.abs() < 1e-3 {
                *v = 0.2;
            }
        }
        let w = random_tensor([1, 1, 5, 5], 306);
        let g = relu_backward(&x, &w).unwrap();
        let r = grad_check(&mut |t| relu(t).dot(&w).unwrap(), &x, &g, H, 1e-4);
        assert!(r.pass, "relu: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
    }
    // maxpool.
    {
        let x = random_tensor([1, 1, 6, 6], 307);
        let pooled = maxpool2d(&x).unwrap();
        let w = random_tensor(pooled.output.shape(), 308);
        let g = maxpool2d_backward(&w, &pooled.argmax, x.shape()).unwrap();
        let r = grad_check(
            &mut |t| maxpool2d(t).unwrap().output.dot(&w).unwrap(),
            &x,
            &g,
            H,
            1e-4,
        );
        assert!(r.pass, "maxpool: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
    }
    // transposed conv: input and kernel gradients.
    {
        let x = random_tensor([1, 2, 4, 4], 309);
        let k = random_tensor([2, 3, 4, 4], 310);
        let w = random_tensor(transposed_conv2d(&x, &k, 2, 1).unwrap().shape(), 311);
        let g = transposed_conv2d_backward(&x, &k, 2, 1, &w).unwrap();
        let r = grad_check(
            &mut |t| transposed_conv2d(t, &k, 2, 1).unwrap().dot(&w).unwrap(),
            &x,
            &g.input,
            H,
            1e-4,
        );
        assert!(r.pass, "tconv input: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
        let r = grad_check(
            &mut |t| transposed_conv2d(&x, t, 2, 1).unwrap().dot(&w).unwrap(),
            &k,
            &g.kernel,
            H,
            1e-4,
        );
        assert!(r.pass, "tconv kernel: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
    }
    // dropout against its own fixed mask.
    {
        let x = random_tensor([1, 1, 5, 5], 312);
        let (_, mask) = dropout(&x, 0.5, true, 99).unwrap();
        let w = random_tensor([1, 1, 5, 5], 313);
        let g = dropout_backward(&w, &mask).unwrap();
        let r = grad_check(
            &mut |t| dropout(t, 0.5, true, 99).unwrap().0.dot(&w).unwrap(),
            &x,
            &g,
            H,
            1e-4,
        );
        assert!(r.pass, "dropout: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
    }
    // softmax + cross-entropy, gradient w.r.t. the logits.
    {
        let z = random_tensor([1, 2, 4, 4], 314);
        let mut r2 = rng(315);
        let labels =
            LabelMap::from_vec(4, 4, (0..16).map(|_| r2.gen_range(0..2u8)).collect()).unwrap();
        let p = softmax_2class(&z).unwrap();
        let (_, g) = cross_entropy(&p, &labels).unwrap();
        let r = grad_check(
            &mut |t| {
                let p = softmax_2class(t).unwrap();
                cross_entropy(&p, &labels).unwrap().0
            },
            &z,
            &g,
            H,
            1e-4,
        );
        assert!(r.pass, "softmax+ce: {}", r.max_rel_error);
        worst_layer = worst_layer.max(r.max_rel_error);
    }

    // End to end on the toy network, at a generic (jittered) parameter
    // point so no ReLU kink sits exactly at zero.
    let config = NetworkConfig::with_divisor(32, 32, 64);
    let mut model = build_model::<f32>(&config, 320).unwrap().cast::<f64>();
    let mut jitter = rng(321);
    model.visit_params_mut(&mut |_, p| {
        for v in p.value.data_mut() {
            *v += jitter.gen_range(-0.02..0.02);
        }
    });
    let (image, label) = &synth_dataset(1, 32, 32, 1.0, 322)[0];
    let (_, cache) = model.forward(image, false, 0).unwrap();
    model.backward(&cache, label).unwrap();
    let mut sampler = rng(323);
    let mut checked = 0;
    let mut worst_e2e = 0.0f64;
    for name in model.param_names() {
        let param = model.param(&name).unwrap();
        let idx = sampler.gen_range(0..param.value.len());
        let analytic = param.grad.data()[idx];
        let probe = |delta: f64| {
            let mut m = model.clone();
            m.visit_params_mut(&mut |pname, p| {
                if pname == name {
                    p.value.data_mut()[idx] += delta;
                }
            });
            let (_, c) = m.forward(image, false, 0).unwrap();
            cross_entropy(c.probs(), label).unwrap().0
        };
        let numeric = (probe(H) - probe(-H)) / (2.0 * H);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8);
        worst_e2e = worst_e2e.max(rel);
        checked += 1;
    }
    assert!(checked >= 20, "only {checked} parameters sampled");
    assert!(worst_e2e <= 1e-3, "end-to-end worst rel error {worst_e2e}");
    println!(
        "acceptance 3 (gradient fidelity): PASS — layers max rel {worst_layer:.2e} (<=1e-4), \
         end-to-end max rel {worst_e2e:.2e} over {checked} params (<=1e-3)"
    );
}

/// Criterion 4: the factor-2 bilinear kernel is the documented outer
/// product and reproduces direct bilinear interpolation of a ramp.
#[test]
fn criterion_04_bilinear_initialization() {
    let kernel = bilinear_kernel::<f64>(2, 1);
    let profile = [0.25, 0.75, 0.75, 0.25];
    for i in 0..4 {
        for j in 0..4 {
            assert!((kernel.at(0, 0, i, j) - profile[i] * profile[j]).abs() < 1e-15);
        }
    }
    let n = 10usize;
    let ramp = Tensor::<f64>::from_vec(
        [1, 1, n, n],
        (0..n * n)
            .map(|i| 0.1 + 0.03 * (i % n) as f64 + 0.01 * (i / n) as f64)
            .collect(),
    )
    .unwrap();
    let up = transposed_conv2d(&ramp, &kernel, 2, 1).unwrap();
    let mut worst = 0.0f64;
    for y in 1..2 * n - 1 {
        for x in 1..2 * n - 1 {
            let sx = x as f64 / 2.0 - 0.25;
            let sy = y as f64 / 2.0 - 0.25;
            let expected = 0.1 + 0.03 * sx + 0.01 * sy;
            worst = worst.max((up.at(0, 0, y, x) - expected).abs());
        }
    }
    assert!(worst < 1e-5, "interior interpolation error {worst}");
    println!(
        "acceptance 4 (bilinear initialization): PASS — kernel exact, ramp interior error {worst:.2e}"
    );
}

/// Criterion 5: AUC agrees with an independent trapezoid, is exact for a
/// perfect separator, sits at chance for noise, and the curve coordinates
/// are monotone in the threshold.
#[test]
fn criterion_05_roc_auc_oracles() {
    let grid = ThresholdGrid::default();

    // Brute-force trapezoid equality on 3 random fixtures.
    for fixture in 0..3u64 {
        let mut r = rng(500 + fixture);
        let prob = ProbabilityMap::from_vec(20, 20, (0..400).map(|_| r.gen()).collect()).unwrap();
        let truth =
            LabelMap::from_vec(20, 20, (0..400).map(|_| r.gen_range(0..2u8)).collect()).unwrap();
        let curve = roc(&grid, &[(&prob, &truth)], RocAveraging::Micro).unwrap();
        let mut pts = vec![(0.0f64, 0.0f64), (1.0, 1.0)];
        for &t in grid.thresholds() {
            let c = confusion(&binarize(&prob, t), &truth).unwrap();
            pts.push((
                c.false_pos as f64 / (c.false_pos + c.true_neg) as f64,
                c.true_pos as f64 / (c.true_pos + c.false_neg) as f64,
            ));
        }
        pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let brute: f64 = pts
            .windows(2)
            .map(|w| (w[1].0 - w[0].0) * (w[1].1 + w[0].1) / 2.0)
            .sum();
        assert_eq!(curve.auc, brute, "fixture {fixture}: auc mismatch");
    }

    // Perfect separator.
    let prob = ProbabilityMap::from_vec(2, 2, vec![0.95, 0.95, 0.05, 0.05]).unwrap();
    let truth = LabelMap::from_vec(2, 2, vec![1, 1, 0, 0]).unwrap();
    let perfect = roc(&grid, &[(&prob, &truth)], RocAveraging::Micro).unwrap();
    assert_eq!(perfect.auc, 1.0);

    // Chance level on >= 1e5 balanced pixels.
    let n = 400 * 300;
    let mut r = rng(510);
    let noise = ProbabilityMap::from_vec(300, 400, (0..n).map(|_| r.gen()).collect()).unwrap();
    let balanced = LabelMap::from_vec(
        300,
        400,
        (0..n).map(|i| (i % 2) as u8).collect(),
    )
    .unwrap();
    let chance = roc(&grid, &[(&noise, &balanced)], RocAveraging::Micro).unwrap();
    assert!(
        (chance.auc - 0.5).abs() <= 0.02,
        "chance-level auc {}",
        chance.auc
    );

    // Monotonicity over 100 random maps.
    for i in 0..100u64 {
        let mut r = rng(600 + i);
        let prob = ProbabilityMap::from_vec(10, 10, (0..100).map(|_| r.gen()).collect()).unwrap();
        let truth =
            LabelMap::from_vec(10, 10, (0..100).map(|_| r.gen_range(0..2u8)).collect()).unwrap();
        if !truth.has_both_classes() {
            continue;
        }
        let curve = roc(&grid, &[(&prob, &truth)], RocAveraging::Micro).unwrap();
        for w in curve.points.windows(2) {
            assert!(w[0].recall >= w[1].recall, "recall not monotone");
            assert!(w[0].fall_out >= w[1].fall_out, "fall-out not monotone");
        }
    }

    // Rank-preserving transform: exact halving keeps every matched
    // operating point identical.
    let mut r = rng(700);
    let prob = ProbabilityMap::from_vec(16, 16, (0..256).map(|_| r.gen()).collect()).unwrap();
    let truth =
        LabelMap::from_vec(16, 16, (0..256).map(|_| r.gen_range(0..2u8)).collect()).unwrap();
    let halved =
        ProbabilityMap::from_vec(16, 16, prob.data().iter().map(|&p| p / 2.0).collect()).unwrap();
    let half_grid =
        ThresholdGrid::new(grid.thresholds().iter().map(|&t| t / 2.0).collect()).unwrap();
    let base = roc(&grid, &[(&prob, &truth)], RocAveraging::Micro).unwrap();
    let transformed = roc(&half_grid, &[(&halved, &truth)], RocAveraging::Micro).unwrap();
    assert_eq!(base.auc, transformed.auc, "auc not invariant under monotone transform");

    println!(
        "acceptance 5 (roc/auc oracle equivalence): PASS — brute-force exact, perfect 1.0, \
         chance {:.4}, monotone on 100 maps",
        chance.auc
    );
}

struct OracleStub;
struct BrightnessOracle;

impl Segmenter for BrightnessOracle {
    fn predict_map(&self, image: &Image) -> Result<ProbabilityMap, String> {
        let mut data = Vec::with_capacity(image.height() * image.width());
        for y in 0..image.height() {
            for x in 0..image.width() {
                let b = (0..3).map(|c| image.get(c, y, x)).sum::<f32>() / 3.0;
                data.push(if b < 0.40 { 0.99 } else { 0.01 });
            }
        }
        Ok(ProbabilityMap::from_vec(image.height(), image.width(), data).unwrap())
    }
}

impl FoldTrainer for OracleStub {
    type Model = BrightnessOracle;
    fn train_fold(
        &self,
        _train: &[&Sample],
        _experiment: &ExperimentConfig,
        _seed: u64,
    ) -> Result<Self::Model, String> {
        Ok(BrightnessOracle)
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

/// Criterion 6: fold plans partition the data, no model is evaluated on
/// its own training samples, and the mean curve is the hand average.
#[test]
fn criterion_06_crossval_harness() {
    // The 460 -> 5 x 92 case.
    let ids: Vec<String> = (0..460).map(|i| format!("im{i:04}")).collect();
    let plan = make_folds(&ids, 5, 77).unwrap();
    assert_eq!(plan.fold_sizes(), vec![92; 5]);
    let mut seen = std::collections::HashSet::new();
    for fold in 0..5 {
        for id in plan.members(fold) {
            assert!(seen.insert(id.to_string()), "{id} appears twice");
        }
    }
    assert_eq!(seen.len(), 460);

    // Spread <= 1 on an uneven count.
    let ids: Vec<String> = (0..23).map(|i| format!("x{i}")).collect();
    let sizes = make_folds(&ids, 5, 1).unwrap().fold_sizes();
    assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);

    // Stub harness: no self-evaluation, hand-averaged mean curve.
    let samples = synth_samples(8, 61);
    let experiment = ExperimentConfig {
        data_aug: false,
        learning_rate: 1e-4,
        iterations: 1,
    };
    let result =
        run_crossval(&samples, &OracleStub, &experiment, &ThresholdGrid::default(), 2, 9).unwrap();
    for m in &result.models {
        for id in &m.test_ids {
            assert!(!m.train_ids.contains(id), "{id} in both train and test");
        }
    }
    for (i, point) in result.mean_curve.iter().enumerate() {
        let recall =
            (result.models[0].table[i].metrics.recall + result.models[1].table[i].metrics.recall)
                / 2.0;
        let fall_out = (result.models[0].table[i].metrics.fall_out
            + result.models[1].table[i].metrics.fall_out)
            / 2.0;
        assert_eq!(point.recall, recall);
        assert_eq!(point.fall_out, fall_out);
    }
    println!("acceptance 6 (cross-validation harness): PASS — 460->5x92, disjoint folds, exact hand average");
}

/// Criterion 7: the toy network learns the synthetic task — held-out AUC
/// at least 0.95 and the final loss at most half the initial loss.
#[test]
fn criterion_07_toy_end_to_end_learning() {
    let all = synth_dataset(80, 64, 96, 1.0, 2024);
    let (train_set, test_set) = all.split_at(60);
    let config = NetworkConfig::with_divisor(64, 96, 8);
    let mut model = build_model::<f32>(&config, 7).unwrap();
    let records = train(&mut model, train_set, &TrainOptions::new(1e-4, 1000, false), 99).unwrap();

    let first_loss = records.first().unwrap().loss;
    let final_loss = records.last().unwrap().loss;
    assert!(
        final_loss <= 0.5 * first_loss,
        "loss {first_loss:.4} -> {final_loss:.4} did not halve"
    );

    let predictions: Vec<ProbabilityMap> = test_set
        .iter()
        .map(|(image, _)| model.predict(image).unwrap())
        .collect();
    let pairs: Vec<(&ProbabilityMap, &LabelMap)> = predictions
        .iter()
        .zip(test_set.iter())
        .map(|(p, (_, l))| (p, l))
        .collect();
    let curve = roc(&ThresholdGrid::default(), &pairs, RocAveraging::Micro).unwrap();
    assert!(curve.auc >= 0.95, "held-out AUC {:.4} < 0.95", curve.auc);
    println!(
        "acceptance 7 (toy end-to-end learning): PASS — loss {first_loss:.4} -> {final_loss:.4}, \
         held-out AUC {:.4}",
        curve.auc
    );
}

/// Criterion 8: the frozen-model round trip is bit-exact and corruption is
/// rejected.
#[test]
fn criterion_08_frozen_model_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.poseg");
    let config = NetworkConfig::with_divisor(32, 32, 64);
    let model = build_model::<f32>(&config, 81).unwrap();
    freeze(&model, &path).unwrap();
    let loaded = load_frozen(&path).unwrap();
    for (i, (image, _)) in synth_dataset(5, 32, 32, 1.0, 82).iter().enumerate() {
        let a = model.predict(image).unwrap();
        let b = loaded.predict(image).unwrap();
        assert_eq!(a, b, "image {i}: predictions not bit-identical");
    }
    let mut bytes = std::fs::read(&path).unwrap();
    let last = bytes.len() - 1;
    bytes[last] ^= 0x01;
    std::fs::write(&path, &bytes).unwrap();
    let err = load_frozen(&path).unwrap_err();
    assert!(err.to_string().contains("checksum"), "{err}");
    println!("acceptance 8 (frozen-model round trip): PASS — bitwise identical on 5 images, corruption rejected");
}

/// Criterion 9: pipeline throughput and accounting under the virtual clock.
#[test]
fn criterion_09_pipeline_throughput_and_semantics() {
    let images: Vec<Image> = synth_dataset(2, 16, 16, 1.0, 91)
        .into_iter()
        .map(|(i, _)| i)
        .collect();
    let mut source = SimulatedSource::new(30.0, 2.5, 0.4, images).unwrap();
    let mut seg = StubSegmenter {
        latency: std::time::Duration::from_millis(100),
        fill: 0.5,
    };
    let config = PipelineConfig::new(16, 16, 623.3);
    let options = RunOptions {
        duration_s: 10.0,
        mode: RunMode::Virtual {
            segment_latency_s: 0.1,
        },
        map_out_dir: None,
    };
    let (log, report) = run_pipeline(&mut source, &mut seg, &config, &options).unwrap();
    assert!(
        (report.achieved_framerate_fps - 10.0).abs() <= 0.5,
        "achieved framerate {}",
        report.achieved_framerate_fps
    );
    assert_eq!(
        log.produced,
        log.segmented + log.dropped,
        "frame accounting must balance after drain"
    );
    for w in log.entries.windows(2) {
        assert!(w[1].frame_id > w[0].frame_id, "frame ids must strictly increase");
    }
    println!(
        "acceptance 9 (pipeline throughput): PASS — {:.2} fps achieved, {} produced = {} segmented + {} dropped",
        report.achieved_framerate_fps, log.produced, log.segmented, log.dropped
    );
}

/// Criterion 10: uncertainty analysis properties; the published case-study
/// percentages are data-dependent reference points only.
#[test]
fn criterion_10_uncertainty_analysis() {
    let base = LabelMap::from_vec(4, 4, (0..16).map(|i| (i % 2) as u8).collect()).unwrap();
    let identical = AnnotatorSet::new(vec![base.clone(), base.clone(), base.clone()]).unwrap();
    assert_eq!(annotator_uncertainty(&identical).area_fraction(), 0.0);

    let complement =
        LabelMap::from_vec(4, 4, base.data().iter().map(|&v| 1 - v).collect()).unwrap();
    let opposed = AnnotatorSet::new(vec![base.clone(), complement]).unwrap();
    assert_eq!(annotator_uncertainty(&opposed).area_fraction(), 1.0);

    let saturated = ProbabilityMap::from_vec(2, 2, vec![0.001, 0.999, 0.001, 0.999]).unwrap();
    assert_eq!(network_uncertainty(&saturated).area_fraction(), 0.0);
    let half = ProbabilityMap::constant(2, 2, 0.5);
    assert_eq!(network_uncertainty(&half).area_fraction(), 1.0);

    // The 10-error / 6-inside counting fixture.
    let truth = LabelMap::new(4, 5);
    let mut wrong = vec![0u8; 20];
    wrong[..10].fill(1);
    let pred = LabelMap::from_vec(4, 5, wrong).unwrap();
    let mut flags = vec![false; 20];
    flags[..6].fill(true);
    let unc = UncertaintyMap::new(4, 5, flags);
    let r = error_in_uncertainty_fraction(&pred, &truth, &unc).unwrap();
    assert!((r.fraction - 0.6).abs() < 1e-12);

    println!(
        "acceptance 10 (uncertainty analysis): PASS — fixtures exact; the published 94.6% / 28.5% / \
         18.9% case-study figures depend on unavailable survey data and are reference points only"
    );
}
