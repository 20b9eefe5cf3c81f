use std::path::Path;

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;

use augbench_core::augment::{augment_dataset, AugmentationSpec};
use augbench_core::classifier::train_classifier;
use augbench_core::dataset::{load_dataset, save_dataset, select_gan_subset, Dataset, Split};
use augbench_core::eval::{
    accuracy, confusion_matrix, run_experiment_with_progress, sweep_gan_with_progress, ExperimentSetup, SweepGanSettings,
    SweepResult, TechniqueId,
};
use augbench_core::gan::{train_gan_with_progress, GanModel};
use augbench_core::render::{compose_pairs, find_novel, render_symbolic, synthesize_dataset, SignTemplate, TemplateLibrary};
use augbench_core::report::{render_report, render_sweep_report, ExperimentReport};

use crate::config::{parse_grid, parse_range, DataSection, ExperimentConfig, GanSection};
use crate::layout::{sidecar, ReproRecord, RunLayout};
use crate::{
    AugmentArgs, ClsTrainArgs, Command, EvaluateArgs, GanGenerateArgs, GanTrainArgs, RenderArgs, ReportArgs, RunOverrides,
    SweepArgs, SynthArgs, TemplateSource,
};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Render(a) => render(a),
        Command::SynthData(a) => synth_data(a),
        Command::Augment(a) => augment(a),
        Command::GanTrain(a) => gan_train(a),
        Command::GanGenerate(a) => gan_generate(a),
        Command::ClsTrain(a) => cls_train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::Sweep(a) => sweep(a),
        Command::Report(a) => report(a),
    }
}

fn warn_all(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

fn library(source: &TemplateSource) -> Result<TemplateLibrary> {
    Ok(match &source.templates {
        Some(dir) => TemplateLibrary::load_dir(dir, source.family)?,
        None => TemplateLibrary::builtin(source.family, source.classes)?,
    })
}

fn library_for(dataset: &Dataset, templates: Option<&Path>) -> Result<TemplateLibrary> {
    let lib = match templates {
        Some(dir) => TemplateLibrary::load_dir(dir, dataset.shape_family())?,
        None => TemplateLibrary::builtin(dataset.shape_family(), dataset.num_classes())?,
    };
    lib.check_covers(dataset.num_classes())?;
    Ok(lib)
}

fn pick_template(source: &TemplateSource, class: Option<usize>, novel: Option<&str>) -> Result<SignTemplate> {
    match (class, novel) {
        (_, Some(name)) => Ok(find_novel(name)?),
        (Some(c), None) => Ok(library(source)?.get(c)?.clone()),
        (None, None) => bail!("one of --class or --novel is required"),
    }
}

fn render(a: RenderArgs) -> Result<()> {
    if a.all {
        let lib = library(&a.source)?;
        lib.save_dir(&a.out)?;
        for t in lib.templates() {
            render_symbolic(t, a.size)?.save_png(&a.out.join(format!("{}.png", t.class_index)))?;
        }
        println!("rendered {} templates into {}", lib.num_classes(), a.out.display());
    } else {
        let template = pick_template(&a.source, a.class, a.novel.as_deref())?;
        render_symbolic(&template, a.size)?.save_png(&a.out)?;
        println!("rendered {:?} (class {}) to {}", template.name, template.class_index, a.out.display());
    }
    #[derive(Serialize)]
    struct Settings<'a> {
        family: String,
        classes: usize,
        class: Option<usize>,
        novel: Option<&'a str>,
        size: usize,
    }
    let settings = Settings {
        family: a.source.family.to_string(),
        classes: a.source.classes,
        class: a.class,
        novel: a.novel.as_deref(),
        size: a.size,
    };
    let record = if a.all { a.out.join("repro.json") } else { sidecar(&a.out) };
    ReproRecord::new("render", vec![], &settings).write(&record)
}

fn synth_data(a: SynthArgs) -> Result<()> {
    let lib = library(&TemplateSource {
        family: a.family,
        classes: a.classes,
        templates: a.templates.clone(),
    })?;
    let dataset = synthesize_dataset(&lib, a.train_per_class, a.test_per_class, a.seed)?;
    let manifest = save_dataset(&dataset, &a.out)?;
    println!("wrote {} samples ({} classes) to {}", dataset.len(), dataset.num_classes(), manifest.display());
    #[derive(Serialize)]
    struct Settings {
        family: String,
        classes: usize,
        train_per_class: usize,
        test_per_class: usize,
    }
    let settings = Settings {
        family: a.family.to_string(),
        classes: lib.num_classes(),
        train_per_class: a.train_per_class,
        test_per_class: a.test_per_class,
    };
    ReproRecord::new("synth-data", vec![a.seed], &settings).write(&a.out.join("repro.json"))
}

fn augment(a: AugmentArgs) -> Result<()> {
    let dataset = load_dataset(&a.manifest)?;
    let mut spec = AugmentationSpec::with_defaults(a.technique, a.seed);
    for text in &a.ranges {
        let (name, range) = parse_range(text)?;
        ensure!(
            a.technique.param_names().contains(&name.as_str()),
            "{} has no parameter {name:?} (expected one of {:?})",
            a.technique,
            a.technique.param_names()
        );
        spec.ranges.insert(name, range);
    }
    spec.ordered_ranges()?;
    let train = dataset.split(Split::Train);
    let augmented = augment_dataset(&train, &spec)?;
    let test = dataset.split(Split::Test);
    let mut samples = augmented.into_samples();
    samples.extend(test.into_samples());
    let out = dataset.with_samples(samples)?;
    let manifest = save_dataset(&out, &a.out)?;
    println!(
        "{}: {} training samples -> {}; wrote {}",
        a.technique,
        train.len(),
        out.split(Split::Train).len(),
        manifest.display()
    );
    ReproRecord::new("augment", vec![a.seed], &spec).write(&a.out.join("repro.json"))
}

fn gan_section(config: Option<&Path>) -> Result<GanSection> {
    Ok(match config {
        Some(path) => ExperimentConfig::load(path)?.gan,
        None => GanSection::default(),
    })
}

/// Best-quality subset of the training split, or all of it.
fn gan_pool(dataset: &Dataset, subset: Option<usize>) -> Result<Dataset> {
    let train = dataset.split(Split::Train);
    Ok(match subset {
        Some(n) => select_gan_subset(&train, n)?,
        None => train,
    })
}

fn train_gan_logged(pool: &Dataset, lib: &TemplateLibrary, gan: &GanSection) -> Result<GanModel> {
    warn_all(&gan.generator().validate()?);
    let pairs = compose_pairs(pool, lib)?;
    eprintln!(
        "training GAN (n_g={}, n_d={}) on {} pairs for {} epochs",
        gan.generator_layers,
        gan.discriminator_layers,
        pairs.len(),
        gan.train.epochs
    );
    let model = train_gan_with_progress(
        &pairs,
        &gan.generator(),
        &gan.discriminator(),
        &gan.train,
        gan.seed,
        &mut |epoch, h| {
            eprintln!(
                "  epoch {:>3}: adversarial {:.4}  L1 {:.4}  discriminator {:.4}",
                epoch + 1,
                h.adversarial[epoch],
                h.l1[epoch],
                h.discriminator[epoch]
            )
        },
    )?;
    Ok(model)
}

fn gan_train(a: GanTrainArgs) -> Result<()> {
    let mut gan = gan_section(a.config.as_deref())?;
    if let Some(v) = a.generator_layers {
        gan.generator_layers = v;
    }
    if let Some(v) = a.discriminator_layers {
        gan.discriminator_layers = v;
    }
    if let Some(v) = a.base_channels {
        gan.generator_base_channels = v;
        gan.discriminator_base_channels = v;
    }
    if let Some(v) = a.epochs {
        gan.train.epochs = v;
    }
    if let Some(v) = a.batch_size {
        gan.train.batch_size = v;
    }
    if let Some(v) = a.learning_rate {
        gan.train.learning_rate = v;
    }
    if let Some(v) = a.l1_weight {
        gan.train.l1_weight = v;
    }
    if a.subset.is_some() {
        gan.subset = a.subset;
    }
    if let Some(v) = a.seed {
        gan.seed = v;
    }
    gan.checkpoint = None;
    gan.discriminator().validate()?;
    gan.train.validate()?;
    let dataset = load_dataset(&a.manifest)?;
    let lib = library_for(&dataset, a.templates.as_deref())?;
    let pool = gan_pool(&dataset, gan.subset)?;
    let model = train_gan_logged(&pool, &lib, &gan)?;
    model.save(&a.out)?;
    println!(
        "saved GAN ({} generator / {} discriminator parameters) to {}",
        model.generator_parameters(),
        model.discriminator_parameters(),
        a.out.display()
    );
    ReproRecord::new("gan-train", vec![gan.seed], &gan).write(&sidecar(&a.out))
}

fn gan_generate(a: GanGenerateArgs) -> Result<()> {
    let model = GanModel::load(&a.checkpoint)?;
    let template = pick_template(&a.source, a.class, a.novel.as_deref())?;
    let symbolic = render_symbolic(&template, model.generator_config.input_size)?;
    model.generate(&symbolic)?.save_png(&a.out)?;
    println!("generated {:?} to {}", template.name, a.out.display());
    #[derive(Serialize)]
    struct Settings<'a> {
        checkpoint: &'a Path,
        template: &'a SignTemplate,
    }
    let settings = Settings {
        checkpoint: &a.checkpoint,
        template: &template,
    };
    ReproRecord::new("gan-generate", vec![], &settings).write(&sidecar(&a.out))
}

fn cls_train(a: ClsTrainArgs) -> Result<()> {
    let mut section = match &a.config {
        Some(path) => ExperimentConfig::load(path)?.classifier,
        None => Default::default(),
    };
    if let Some(v) = a.epochs {
        section.train.epochs = v;
    }
    if let Some(v) = a.learning_rate {
        section.train.learning_rate = v;
    }
    if let Some(v) = a.batch_size {
        section.train.batch_size = v;
    }
    section.train.validate()?;
    let dataset = load_dataset(&a.manifest)?;
    let cfg = section.build(dataset.num_classes());
    cfg.validate()?;
    let model = train_classifier(&dataset, &cfg, &section.train, a.seed)?;
    let final_acc = model.history.accuracy.last().copied().unwrap_or(0.0);
    println!("final training accuracy {:.1}%", final_acc * 100.0);
    let test = dataset.split(Split::Test);
    if !test.is_empty() {
        let (truth, predicted) = model.evaluate(&test)?;
        let cm = confusion_matrix(&truth, &predicted, dataset.num_classes())?;
        println!("test accuracy {:.1}% on {} samples", accuracy(&cm)? * 100.0, test.len());
    }
    model.save(&a.out)?;
    ReproRecord::new("cls-train", vec![a.seed], &section).write(&sidecar(&a.out))
}

fn load_data(data: &DataSection) -> Result<(Dataset, TemplateLibrary)> {
    match (&data.manifest, &data.synthetic) {
        (Some(manifest), _) => {
            let dataset = load_dataset(manifest)?;
            let lib = library_for(&dataset, data.templates.as_deref())?;
            Ok((dataset, lib))
        }
        (None, Some(s)) => {
            let lib = library(&TemplateSource {
                family: s.family,
                classes: s.classes,
                templates: data.templates.clone(),
            })?;
            let dataset = synthesize_dataset(&lib, s.train_per_class, s.test_per_class, s.seed)?;
            Ok((dataset, lib))
        }
        (None, None) => bail!("config has no data source"),
    }
}

fn apply_overrides(cfg: &mut ExperimentConfig, o: &RunOverrides) {
    if let Some(v) = &o.name {
        cfg.name = v.clone();
    }
    if let Some(v) = &o.output_dir {
        cfg.output_dir = v.clone();
    }
    if let Some(v) = o.repeats {
        cfg.experiment.repeats = v;
        if o.seeds.is_none() {
            cfg.experiment.seeds = None;
        }
    }
    if let Some(v) = &o.seeds {
        cfg.experiment.seeds = Some(v.clone());
        if o.repeats.is_none() {
            cfg.experiment.repeats = v.len();
        }
    }
    if let Some(v) = o.classifier_epochs {
        cfg.classifier.train.epochs = v;
    }
    if let Some(v) = o.gan_epochs {
        cfg.gan.train.epochs = v;
    }
}

/// Loads, overrides and validates a config, then creates the run directory
/// and stores the effective config in it.
fn prepare_run(path: &Path, overrides: &RunOverrides, edit: impl FnOnce(&mut ExperimentConfig)) -> Result<(ExperimentConfig, RunLayout)> {
    let mut cfg = ExperimentConfig::load(path)?;
    apply_overrides(&mut cfg, overrides);
    edit(&mut cfg);
    warn_all(&cfg.validate()?);
    let layout = RunLayout::create(&cfg.run_dir())?;
    let config_path = layout.config.join("config.toml");
    std::fs::write(&config_path, cfg.to_toml()?).with_context(|| format!("cannot write {}", config_path.display()))?;
    Ok((cfg, layout))
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let techniques = a.techniques.clone();
    let (cfg, layout) = prepare_run(&a.config, &a.overrides, |cfg| {
        if let Some(t) = techniques {
            cfg.experiment.techniques = t;
        }
    })?;
    let (dataset, lib) = load_data(&cfg.data)?;
    let classifier = cfg.classifier.build(dataset.num_classes());
    classifier.validate()?;
    let gan = if cfg.experiment.techniques.contains(&TechniqueId::Pix2pix) {
        Some(match &cfg.gan.checkpoint {
            Some(path) => GanModel::load(path)?,
            None => {
                let pool = gan_pool(&dataset, cfg.gan.subset)?;
                let model = train_gan_logged(&pool, &lib, &cfg.gan)?;
                model.save(&layout.checkpoints.join("gan.ckpt"))?;
                model
            }
        })
    } else {
        None
    };
    let setup = ExperimentSetup {
        classifier: &classifier,
        train: &cfg.classifier.train,
        augment_seed: cfg.augment.seed,
        augment_ranges: &cfg.augment.ranges,
        gan: gan.as_ref(),
        templates: Some(&lib),
        empty_classes: cfg.experiment.empty_classes,
    };
    let seeds = cfg.experiment.seeds();
    let mut rows = Vec::with_capacity(cfg.experiment.techniques.len());
    for &technique in &cfg.experiment.techniques {
        eprintln!("{}: {} runs", technique.label(), seeds.len());
        let row = run_experiment_with_progress(technique, &dataset, &seeds, &setup, &mut |r| {
            eprintln!("  seed {}: accuracy {:.1}%", r.seed, r.accuracy * 100.0)
        })?;
        rows.push(row);
    }
    let report = ExperimentReport {
        title: cfg.experiment.title.clone(),
        rows,
    };
    let results = layout.results.join("results.json");
    std::fs::write(&results, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("cannot write {}", results.display()))?;
    let artifacts = render_report(&report, &layout.reports)?;
    print!("{}", std::fs::read_to_string(&artifacts.table)?);
    println!("results in {}", layout.root.display());
    ReproRecord::new("evaluate", seeds, &cfg).write(&layout.root.join("repro.json"))
}

fn sweep(a: SweepArgs) -> Result<()> {
    let grid = a.grid.as_deref().map(parse_grid).transpose()?;
    let no_baseline = a.no_baseline;
    let (cfg, layout) = prepare_run(&a.config, &a.overrides, |cfg| {
        if let Some((d, g)) = grid {
            cfg.sweep.discriminator_layers = d;
            cfg.sweep.generator_layers = g;
        }
        if no_baseline {
            cfg.sweep.baseline = false;
        }
    })?;
    let (dataset, lib) = load_data(&cfg.data)?;
    let classifier = cfg.classifier.build(dataset.num_classes());
    classifier.validate()?;
    let setup = ExperimentSetup {
        classifier: &classifier,
        train: &cfg.classifier.train,
        augment_seed: cfg.augment.seed,
        augment_ranges: &cfg.augment.ranges,
        gan: None,
        templates: Some(&lib),
        empty_classes: cfg.experiment.empty_classes,
    };
    let settings = SweepGanSettings {
        generator_base_channels: cfg.gan.generator_base_channels,
        discriminator_base_channels: cfg.gan.discriminator_base_channels,
        hyper: cfg.gan.train,
        seed: cfg.gan.seed,
    };
    let pool = gan_pool(&dataset, cfg.gan.subset)?;
    let seeds = cfg.experiment.seeds();
    let grid = cfg.sweep.grid();
    eprintln!("sweeping {} cells, {} runs each", grid.len(), seeds.len());
    let result: SweepResult = sweep_gan_with_progress(
        &dataset,
        &pool,
        &lib,
        &grid,
        &seeds,
        &settings,
        &setup,
        cfg.sweep.baseline,
        &mut |c| {
            eprintln!(
                "  n_d={} n_g={}: accuracy {:.1}%, balanced {:.1}%",
                c.n_d,
                c.n_g,
                c.accuracy.mean * 100.0,
                c.balanced_accuracy.mean * 100.0
            )
        },
    )?;
    let results = layout.results.join("sweep_results.json");
    std::fs::write(&results, serde_json::to_string_pretty(&result)? + "\n")
        .with_context(|| format!("cannot write {}", results.display()))?;
    let artifacts = render_sweep_report(&cfg.sweep.title, &result, &layout.reports)?;
    print!("{}", std::fs::read_to_string(&artifacts.table)?);
    println!("results in {}", layout.root.display());
    ReproRecord::new("sweep", seeds, &cfg).write(&layout.root.join("repro.json"))
}

fn report(a: ReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.results).with_context(|| format!("cannot read {}", a.results.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("{} is not JSON", a.results.display()))?;
    let artifacts = if value.get("rows").is_some() {
        let report: ExperimentReport = serde_json::from_value(value)?;
        render_report(&report, &a.out)?
    } else if value.get("cells").is_some() {
        let sweep: SweepResult = serde_json::from_value(value)?;
        let title = a.results.file_stem().and_then(|s| s.to_str()).unwrap_or("sweep").replace('_', " ");
        render_sweep_report(&title, &sweep, &a.out)?
    } else {
        bail!("{} is neither an experiment nor a sweep results file", a.results.display());
    };
    print!("{}", std::fs::read_to_string(&artifacts.table)?);
    #[derive(Serialize)]
    struct Settings<'a> {
        results: &'a Path,
    }
    ReproRecord::new("report", vec![], &Settings { results: &a.results }).write(&a.out.join("repro.json"))
}
