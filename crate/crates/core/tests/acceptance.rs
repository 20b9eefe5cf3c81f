//! Acceptance criteria 1-8. Each test prints one `criterion N: PASS|FAIL`
//! line straight to stderr (visible without `--nocapture`) and then fails
//! if the criterion failed. Criteria run one at a time so that their time
//! budgets are not distorted by each other.

use std::collections::{BTreeMap, HashMap};
use std::io::Write;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use augbench_core::augment::{apply_op, augment_dataset, AugmentParams, AugmentationSpec, Technique};
use augbench_core::classifier::{train_classifier, ClassifierConfig, TrainHyperparams};
use augbench_core::dataset::{
    merge_datasets, merged_pool_size, select_gan_subset, Dataset, ImageSample, ShapeFamily, Split, CIRCULAR_CLASSES,
};
use augbench_core::eval::{
    accuracy, balanced_accuracy, build_training_set, confusion_matrix, run_experiment, sweep_gan, ExperimentSetup,
    SweepGanSettings, TechniqueId,
};
use augbench_core::gan::{
    build_generator, train_gan, DiscriminatorConfig, GanHyperparams, GanModel, GeneratorConfig, DISCRIMINATOR_DEPTHS,
    GENERATOR_DEPTHS,
};
use augbench_core::nn::loss::l1;
use augbench_core::nn::{zero_grad, Layer, Tensor};
use augbench_core::raster::Raster;
use augbench_core::render::{compose_pairs, synthesize_dataset, TemplateLibrary};
use augbench_core::report::{format_sweep_table, format_table, ExperimentReport};

static SERIAL: Mutex<()> = Mutex::new(());

type Outcome = Result<String, String>;

macro_rules! check {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

fn criterion(id: u8, title: &str, budget: Duration, body: impl FnOnce() -> Outcome) {
    let _serial = SERIAL.lock().unwrap_or_else(|e| e.into_inner());
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(body)).unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".to_string());
        Err(format!("panicked: {msg}"))
    });
    let elapsed = start.elapsed();
    let outcome = outcome.and_then(|detail| {
        if elapsed <= budget {
            Ok(detail)
        } else {
            Err(format!("{detail}; exceeded budget of {}s", budget.as_secs()))
        }
    });
    let (verdict, detail) = match &outcome {
        Ok(d) => ("PASS", d),
        Err(d) => ("FAIL", d),
    };
    let line = format!(
        "criterion {id}: {verdict} - {title} [{detail}] ({:.1}s)\n",
        elapsed.as_secs_f64()
    );
    let _ = std::io::stderr().lock().write_all(line.as_bytes());
    if let Err(e) = outcome {
        panic!("criterion {id} failed: {e}");
    }
}

fn random_image(rng: &mut ChaCha8Rng, size: usize) -> Raster {
    Raster::from_fn(size, size, |_, _| [rng.random(), rng.random(), rng.random()])
}

fn synthetic(classes: usize, train: usize, test: usize, seed: u64) -> (Dataset, TemplateLibrary) {
    let lib = TemplateLibrary::builtin(ShapeFamily::Synthetic, classes).unwrap();
    let ds = synthesize_dataset(&lib, train, test, seed).unwrap();
    (ds, lib)
}

#[test]
fn criterion_1_metric_oracles() {
    criterion(1, "metrics match brute-force oracles on 100 instances", Duration::from_secs(10), || {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut with_empty = 0;
        for instance in 0..100 {
            let k = rng.random_range(1..=20usize);
            let n = rng.random_range(1..=5000usize);
            // every fourth instance draws true labels from half the classes only
            let true_classes = if instance % 4 == 0 { k.div_ceil(2) } else { k };
            let truth: Vec<usize> = (0..n).map(|_| rng.random_range(0..true_classes)).collect();
            let pred: Vec<usize> = (0..n).map(|_| rng.random_range(0..k)).collect();

            let mut counts: HashMap<(usize, usize), u64> = HashMap::new();
            for (&t, &p) in truth.iter().zip(&pred) {
                *counts.entry((t, p)).or_default() += 1;
            }
            let cm = confusion_matrix(&truth, &pred, k).map_err(|e| e.to_string())?;
            for i in 0..k {
                for j in 0..k {
                    let expected = counts.get(&(i, j)).copied().unwrap_or(0);
                    check!(cm.get(i, j) == expected, "instance {instance}: cell ({i},{j}) {} != {expected}", cm.get(i, j));
                }
            }

            let hits = truth.iter().zip(&pred).filter(|(t, p)| t == p).count();
            let acc = accuracy(&cm).map_err(|e| e.to_string())?;
            check!(acc == hits as f64 / n as f64, "instance {instance}: accuracy {acc}");
            check!(
                cm.trace() as u128 * n as u128 == hits as u128 * cm.total() as u128,
                "instance {instance}: trace/total is not hits/n"
            );

            let mut recalls = Vec::new();
            for c in 0..k {
                let support = truth.iter().filter(|&&t| t == c).count();
                if support > 0 {
                    let correct = truth.iter().zip(&pred).filter(|&(&t, &p)| t == c && p == c).count();
                    recalls.push(correct as f64 / support as f64);
                }
            }
            if recalls.len() < k {
                with_empty += 1;
            }
            let oracle = recalls.iter().sum::<f64>() / recalls.len() as f64;
            let bal = balanced_accuracy(&cm).map_err(|e| e.to_string())?;
            check!(bal == oracle, "instance {instance}: balanced {bal} != {oracle}");
        }
        check!(confusion_matrix(&[0, 1], &[0], 2).is_err(), "length mismatch accepted");
        check!(confusion_matrix(&[0, 2], &[0, 1], 2).is_err(), "out-of-range label accepted");
        Ok(format!("100 instances exact, {with_empty} with empty classes"))
    });
}

/// Direct 2-D Gaussian convolution with clamped borders in f64.
fn blur_oracle(img: &Raster, sigma: f64) -> Vec<f64> {
    let r = (3.0 * sigma).ceil() as i64;
    let weight = |i: i64, j: i64| (-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp();
    let total: f64 = (-r..=r).flat_map(|j| (-r..=r).map(move |i| weight(i, j))).sum();
    let (w, h) = (img.width() as i64, img.height() as i64);
    let mut out = Vec::with_capacity((w * h * 3) as usize);
    for y in 0..h {
        for x in 0..w {
            for c in 0..3 {
                let mut acc = 0.0;
                for j in -r..=r {
                    for i in -r..=r {
                        let sx = (x + i).clamp(0, w - 1) as usize;
                        let sy = (y + j).clamp(0, h - 1) as usize;
                        acc += weight(i, j) / total * img.get(sx, sy, c) as f64;
                    }
                }
                out.push(acc);
            }
        }
    }
    out
}

#[test]
fn criterion_2_augmentation_properties() {
    criterion(2, "augmentation identities, blur oracle, doubling, reproducibility", Duration::from_secs(60), || {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..5 {
            let img = random_image(&mut rng, 64);
            let identities = [
                AugmentParams::Brightness { delta: 0.0 },
                AugmentParams::Contrast { factor: 1.0 },
                AugmentParams::Displacement { dx: 0.0, dy: 0.0 },
                AugmentParams::Occlusion {
                    x: 20.0,
                    y: 20.0,
                    width: 0.0,
                    height: 0.0,
                    fill: 0.0,
                },
                AugmentParams::Rotation { degrees: 0.0 },
                AugmentParams::Scaling { factor: 1.0 },
            ];
            for p in identities {
                let out = apply_op(&img, &p).map_err(|e| e.to_string())?;
                check!(out == img, "{p:?} is not the identity");
            }
            let out = apply_op(&img, &AugmentParams::Blur { sigma: 0.0 }).map_err(|e| e.to_string())?;
            let worst = out.data().iter().zip(img.data()).map(|(a, b)| (a - b).abs()).fold(0.0, f32::max);
            check!(worst <= 1e-6, "blur sigma 0 deviates by {worst}");
        }

        let mut blur_err = 0.0f64;
        for sigma in [0.5f32, 1.0, 1.7, 2.5] {
            let img = random_image(&mut rng, 64);
            let out = apply_op(&img, &AugmentParams::Blur { sigma }).map_err(|e| e.to_string())?;
            for (a, b) in out.data().iter().zip(blur_oracle(&img, sigma as f64)) {
                blur_err = blur_err.max((*a as f64 - b).abs());
            }
        }
        check!(blur_err <= 1e-5, "blur differs from direct convolution by {blur_err}");

        for trial in 0..20u64 {
            let n = rng.random_range(1..30usize);
            let k = rng.random_range(2..8usize);
            let size = 64;
            let samples = (0..n)
                .map(|_| ImageSample::new(random_image(&mut rng, size), rng.random_range(0..k), Split::Train))
                .collect();
            let ds = Dataset::new(samples, k, ShapeFamily::Synthetic).map_err(|e| e.to_string())?;
            let technique = Technique::ALL[trial as usize % Technique::ALL.len()];
            let spec = AugmentationSpec::with_defaults(technique, trial);
            let a = augment_dataset(&ds, &spec).map_err(|e| e.to_string())?;
            let b = augment_dataset(&ds, &spec).map_err(|e| e.to_string())?;
            check!(a.len() == 2 * n, "{technique}: {n} -> {} samples", a.len());
            let mut before = ds.labels();
            before.extend(ds.labels());
            let mut after = a.labels();
            before.sort_unstable();
            after.sort_unstable();
            check!(before == after, "{technique}: label multiset changed");
            let bits = |d: &Dataset| -> Vec<u32> {
                d.samples().iter().flat_map(|s| s.pixels.data().iter().map(|v| v.to_bits())).collect()
            };
            check!(bits(&a) == bits(&b), "{technique}: repeated augmentation differs");
        }
        Ok(format!("identities exact, blur max error {blur_err:.1e}, 20 random datasets doubled"))
    });
}

/// Output side of `layers` stride-2 4x4 pad-1 convolutions followed by a
/// 3x3 stride-1 pad-1 head.
fn patch_grid_by_arithmetic(input: usize, layers: usize) -> usize {
    let conv = |n: usize, k: usize, s: usize, p: usize| (n + 2 * p - k) / s + 1;
    let mut n = input;
    for _ in 0..layers {
        n = conv(n, 4, 2, 1);
    }
    conv(n, 3, 1, 1)
}

#[test]
fn criterion_3_gan_architecture_contracts() {
    criterion(3, "generator shapes and patch grids over the depth grid", Duration::from_secs(120), || {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let condition = random_image(&mut rng, 64);
        let candidate = random_image(&mut rng, 64);
        let mut grids = BTreeMap::new();
        for &n_d in &DISCRIMINATOR_DEPTHS {
            for &n_g in &GENERATOR_DEPTHS {
                let model = GanModel::new(
                    &GeneratorConfig::new(n_g, 64),
                    &DiscriminatorConfig::new(n_d, 64),
                    &GanHyperparams::default(),
                    (n_d * 100 + n_g) as u64,
                )
                .map_err(|e| e.to_string())?;
                let out = model.generate(&condition).map_err(|e| e.to_string())?;
                check!(
                    out.width() == 64 && out.height() == 64 && out.data().len() == 64 * 64 * 3,
                    "n_g={n_g}: output {}x{}",
                    out.width(),
                    out.height()
                );
                let (grid, decision) = model.discriminate(&condition, &candidate).map_err(|e| e.to_string())?;
                let side = patch_grid_by_arithmetic(64, n_d);
                check!(grid.len() == side * side, "n_d={n_d}: {} patches, expected {side}x{side}", grid.len());
                let mean = grid.iter().map(|&v| v as f64).sum::<f64>() / grid.len() as f64;
                check!((mean - decision as f64).abs() <= 1e-6, "n_d={n_d}: decision {decision} vs mean {mean}");
                grids.insert(n_d, side);
            }
        }
        check!(grids[&3] == 8 && grids[&4] == 4, "patch grids {grids:?}");
        Ok("10 configurations, grids 8x8 (n_d=3) and 4x4 (n_d=4)".to_string())
    });
}

fn l1_loss(g: &mut dyn Layer<f64>, x: &Tensor<f64>, target: &Tensor<f64>) -> f64 {
    let y = g.forward(x, true);
    l1(&y, target).0
}

fn nudge(g: &mut dyn Layer<f64>, param: usize, index: usize, delta: f64) {
    let mut k = 0;
    g.visit("", &mut |_, p| {
        if p.trainable {
            if k == param {
                p.value[index] += delta;
            }
            k += 1;
        }
    });
}

#[test]
fn criterion_4_gradient_check() {
    criterion(4, "generator L1 gradients match central differences", Duration::from_secs(600), || {
        let cfg = GeneratorConfig {
            n_conv_layers: 2,
            base_channels: 4,
            input_size: 8,
        };
        let mut g = build_generator::<f64>(&cfg, 4).map_err(|e| e.to_string())?;
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let shape = [2, 3, 8, 8];
        let len = shape.iter().product();
        let x = Tensor::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect());
        let target = Tensor::from_vec(shape, (0..len).map(|_| rng.random_range(-1.0..1.0)).collect());

        zero_grad(&mut g);
        let y = g.forward(&x, true);
        let (_, grad) = l1(&y, &target);
        g.backward(&grad);
        let mut analytic: Vec<(String, Vec<f64>)> = Vec::new();
        g.visit("", &mut |name, p| {
            if p.trainable {
                analytic.push((name.to_string(), p.grad.clone()));
            }
        });

        let h = 1e-6;
        let mut worst = 0.0f64;
        for _ in 0..20 {
            let param = rng.random_range(0..analytic.len());
            let index = rng.random_range(0..analytic[param].1.len());
            nudge(&mut g, param, index, h);
            let plus = l1_loss(&mut g, &x, &target);
            nudge(&mut g, param, index, -2.0 * h);
            let minus = l1_loss(&mut g, &x, &target);
            nudge(&mut g, param, index, h);
            let numeric = (plus - minus) / (2.0 * h);
            let a = analytic[param].1[index];
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-7);
            check!(
                rel <= 1e-3,
                "{}[{index}]: analytic {a:.6e}, numeric {numeric:.6e}, relative error {rel:.2e}",
                analytic[param].0
            );
            worst = worst.max(rel);
        }
        Ok(format!("20 coordinates, worst relative error {worst:.2e}"))
    });
}

#[test]
fn criterion_5_toy_gan_descent() {
    criterion(5, "toy GAN L1 descent and deterministic generation", Duration::from_secs(15 * 60), || {
        let (ds, lib) = synthetic(10, 20, 0, 7);
        let pairs = compose_pairs(&ds, &lib).map_err(|e| e.to_string())?;
        check!(pairs.len() == 200, "{} pairs", pairs.len());
        let hyper = GanHyperparams {
            epochs: 20,
            ..Default::default()
        };
        let model = train_gan(&pairs, &GeneratorConfig::new(4, 32), &DiscriminatorConfig::new(3, 32), &hyper, 1)
            .map_err(|e| e.to_string())?;
        let h = &model.history;
        check!(h.len() == 20, "{} epochs recorded", h.len());
        check!(h.all_finite(), "non-finite loss in history");
        let (first, last) = (h.l1[0], h.l1[19]);
        let ratio = last / first;
        check!(ratio <= 0.7, "L1 {first:.4} -> {last:.4} (ratio {ratio:.3})");
        let a = model.generate(&pairs[0].symbolic).map_err(|e| e.to_string())?;
        let b = model.generate(&pairs[0].symbolic).map_err(|e| e.to_string())?;
        let same = a.data().iter().zip(b.data()).all(|(x, y)| x.to_bits() == y.to_bits());
        check!(same, "generate() is not bit-identical across calls");
        Ok(format!("L1 {first:.4} -> {last:.4}, ratio {ratio:.3}"))
    });
}

#[test]
fn criterion_6_classifier_overfit() {
    criterion(6, "classifier overfits 50 images in 100 epochs", Duration::from_secs(5 * 60), || {
        let (ds, _) = synthetic(5, 10, 0, 11);
        check!(ds.len() == 50, "{} images", ds.len());
        let hyper = TrainHyperparams::default();
        check!(hyper.epochs == 100, "default epochs {}", hyper.epochs);
        let model = train_classifier(&ds, &ClassifierConfig::new(5), &hyper, 1).map_err(|e| e.to_string())?;
        let (truth, pred) = model.evaluate(&ds).map_err(|e| e.to_string())?;
        let acc = accuracy(&confusion_matrix(&truth, &pred, 5).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        check!(acc >= 0.95, "train accuracy {acc:.3}");
        Ok(format!("train accuracy {:.1}%", acc * 100.0))
    });
}

#[test]
fn criterion_7_end_to_end_protocol() {
    criterion(7, "desk-scale protocol with technique table output", Duration::from_secs(45 * 60), || {
        let (ds, lib) = synthetic(10, 50, 50, 2024);
        let train = ds.split(Split::Train);
        check!(train.len() == 500 && ds.split(Split::Test).len() == 500, "dataset split sizes");

        let gan_hyper = GanHyperparams {
            epochs: 10,
            ..Default::default()
        };
        let pool = select_gan_subset(&train, 200).map_err(|e| e.to_string())?;
        let pairs = compose_pairs(&pool, &lib).map_err(|e| e.to_string())?;
        let gan = train_gan(&pairs, &GeneratorConfig::new(4, 32), &DiscriminatorConfig::new(3, 32), &gan_hyper, 5)
            .map_err(|e| e.to_string())?;

        let classifier = ClassifierConfig::new(10);
        let hyper = TrainHyperparams {
            epochs: 10,
            batch_size: 32,
            ..Default::default()
        };
        let ranges = BTreeMap::new();
        let setup = ExperimentSetup {
            classifier: &classifier,
            train: &hyper,
            augment_seed: 11,
            augment_ranges: &ranges,
            gan: Some(&gan),
            templates: Some(&lib),
            empty_classes: Default::default(),
        };
        let techniques = [
            TechniqueId::None,
            TechniqueId::Classic(Technique::Contrast),
            TechniqueId::Classic(Technique::Displacement),
            TechniqueId::Pix2pix,
        ];
        let seeds = [1, 2, 3];
        let mut rows = Vec::new();
        for t in techniques {
            rows.push(run_experiment(t, &ds, &seeds, &setup).map_err(|e| e.to_string())?);
        }
        for row in &rows {
            let expected = if row.technique == TechniqueId::None { 500 } else { 1000 };
            check!(row.train_samples == expected, "{}: {} samples", row.technique.label(), row.train_samples);
            check!(row.runs.len() == 3, "{}: {} runs", row.technique.label(), row.runs.len());
        }
        let report = ExperimentReport {
            title: "Desk-scale augmentation comparison".to_string(),
            rows,
        };
        let table = format_table(&report);
        let header = table
            .lines()
            .find(|l| l.starts_with("| Augmentation"))
            .ok_or("table has no header")?;
        let columns: Vec<&str> = header.trim_matches('|').split('|').map(str::trim).collect();
        check!(columns == ["Augmentation", "# of Samples", "μ ± σ", "Min", "Max"], "columns {columns:?}");
        let body: Vec<&str> = table.lines().filter(|l| l.starts_with("| ") && !l.starts_with("| Augmentation")).collect();
        check!(body.len() == 4, "{} table rows", body.len());

        let json = serde_json::to_string(&report).map_err(|e| e.to_string())?;
        let back: ExperimentReport = serde_json::from_str(&json).map_err(|e| e.to_string())?;
        check!(format_table(&back) == table, "table not byte-stable through the results file");

        // one run of each training-set kind repeated under the same seed
        let displacement = &report.rows[2];
        let again = run_experiment(displacement.technique, &ds, &[1], &setup).map_err(|e| e.to_string())?;
        check!(again.runs[0] == displacement.runs[0], "displacement seed 1 not reproducible");
        let rebuilt = build_training_set(TechniqueId::Pix2pix, &train, &setup).map_err(|e| e.to_string())?;
        let first = build_training_set(TechniqueId::Pix2pix, &train, &setup).map_err(|e| e.to_string())?;
        check!(rebuilt == first, "pix2pix training set not reproducible");

        let _ = std::io::stderr().lock().write_all(table.as_bytes());
        Ok("4 techniques x 3 repeats, counts 500/1000/1000/1000, table byte-stable".to_string())
    });
}

#[test]
fn criterion_8_sweep_protocol() {
    criterion(8, "GAN depth sweep with balanced accuracy and pool bookkeeping", Duration::from_secs(30 * 60), || {
        let (ds, lib) = synthetic(4, 6, 4, 8);
        let train = ds.split(Split::Train);
        let pool = select_gan_subset(&train, 12).map_err(|e| e.to_string())?;
        let mut classifier = ClassifierConfig::new(4);
        classifier.stem_channels = 8;
        classifier.fire_module_widths = vec![(4, 8), (4, 8), (8, 16), (8, 16), (8, 16)];
        let hyper = TrainHyperparams {
            epochs: 3,
            batch_size: 8,
            ..Default::default()
        };
        let ranges = BTreeMap::new();
        let setup = ExperimentSetup {
            classifier: &classifier,
            train: &hyper,
            augment_seed: 0,
            augment_ranges: &ranges,
            gan: None,
            templates: Some(&lib),
            empty_classes: Default::default(),
        };
        let gan = SweepGanSettings {
            generator_base_channels: 8,
            discriminator_base_channels: 8,
            hyper: GanHyperparams {
                epochs: 2,
                batch_size: 4,
                ..Default::default()
            },
            seed: 8,
        };
        let grid = [(3, 2), (3, 4), (4, 2), (4, 4)];
        let sweep = sweep_gan(&ds, &pool, &lib, &grid, &[1, 2], &gan, &setup, true).map_err(|e| e.to_string())?;
        let cells: Vec<(usize, usize)> = sweep.cells.iter().map(|c| (c.n_d, c.n_g)).collect();
        check!(cells == grid, "cells {cells:?}");
        let expected = merged_pool_size(train.len(), pool.len());
        for c in &sweep.cells {
            check!(c.train_samples == expected, "cell {:?}: {} samples, expected {expected}", (c.n_d, c.n_g), c.train_samples);
            check!(c.runs.len() == 2, "cell {:?}: {} runs", (c.n_d, c.n_g), c.runs.len());
            check!(
                (0.0..=1.0).contains(&c.balanced_accuracy.mean) && c.gan_history.all_finite(),
                "cell {:?}: bad statistics",
                (c.n_d, c.n_g)
            );
        }
        check!(sweep.baseline.as_ref().is_some_and(|b| b.train_samples == train.len()), "baseline row");
        let table = format_sweep_table("Toy sweep", &sweep);
        let header = table.lines().find(|l| l.starts_with("| Discriminator")).ok_or("no header")?;
        let columns: Vec<&str> = header.trim_matches('|').split('|').map(str::trim).collect();
        check!(
            columns
                == [
                    "Discriminator",
                    "Generator",
                    "Training Samples",
                    "Accuracy μ ± σ",
                    "Min",
                    "Max",
                    "Balanced Accuracy μ ± σ",
                    "Min",
                    "Max"
                ],
            "columns {columns:?}"
        );
        check!(table.lines().filter(|l| l.starts_with("| ")).count() == 6, "expected header + baseline + 4 cells");

        // pool bookkeeping through the merging code path on mocked counts
        let pixels = Arc::new(Raster::filled(64, 64, [0.5; 3]));
        let mock = |n: usize| {
            let samples = (0..n)
                .map(|i| ImageSample {
                    pixels: Arc::clone(&pixels),
                    class_index: i % CIRCULAR_CLASSES,
                    split: Split::Train,
                    bbox: None,
                    quality: None,
                })
                .collect();
            Dataset::new(samples, CIRCULAR_CLASSES, ShapeFamily::Circular).unwrap()
        };
        let merged = merge_datasets(&mock(61089), &mock(5809)).map_err(|e| e.to_string())?;
        check!(merged.len() == 66898, "merged pool has {} samples", merged.len());
        check!(merged_pool_size(61089, 5809) == 66898, "merged_pool_size(61089, 5809)");

        let _ = std::io::stderr().lock().write_all(table.as_bytes());
        Ok(format!("4 cells + baseline, {expected} training samples per cell, 61089 + 5809 = 66898"))
    });
}
