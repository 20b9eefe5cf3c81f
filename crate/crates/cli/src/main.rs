//! `augbench`: benchmark classical and GAN-based augmentation on
//! traffic-sign classification.

mod commands;
mod config;
mod layout;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use augbench_core::dataset::ShapeFamily;

#[derive(Parser, Debug)]
#[command(name = "augbench", version, about = "Compare classical and GAN-based data augmentation for sign classification")]
#[command(after_help = "Examples:
  augbench synth-data --classes 10 --train-per-class 50 --test-per-class 50 --out data
  augbench evaluate --config configs/desk.toml
  augbench sweep --config configs/desk.toml --grid 3,4x2,4 --repeats 2
  augbench report --results runs/desk/results/results.json --out runs/desk/reports")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Render symbolic sign templates to PNG
    Render(RenderArgs),
    /// Build a synthetic dataset and write its manifest
    SynthData(SynthArgs),
    /// Add one classically augmented copy of every training sample
    Augment(AugmentArgs),
    /// Train a pix2pix GAN on (symbolic, real) pairs
    GanTrain(GanTrainArgs),
    /// Translate a symbolic sign into a realistic image with a trained GAN
    GanGenerate(GanGenerateArgs),
    /// Train the classifier on a dataset's training split
    ClsTrain(ClsTrainArgs),
    /// Run the repeated-training comparison of augmentation techniques
    Evaluate(EvaluateArgs),
    /// Sweep generator and discriminator depths
    Sweep(SweepArgs),
    /// Re-render tables and heatmaps from a results file
    Report(ReportArgs),
}

#[derive(Args, Debug)]
struct TemplateSource {
    /// Shape family of the built-in templates
    #[arg(long, default_value = "circular")]
    family: ShapeFamily,
    /// Class count for the synthetic family
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Directory of `<class>.json` templates, replacing the built-in ones
    #[arg(long)]
    templates: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct RenderArgs {
    #[command(flatten)]
    source: TemplateSource,
    /// Class index to render
    #[arg(long = "class", conflicts_with_all = ["novel", "all"])]
    class: Option<usize>,
    /// Render a novel template by name, e.g. "end speed limit 40"
    #[arg(long, conflicts_with = "all")]
    novel: Option<String>,
    /// Render every template of the family (PNG and JSON) into --out
    #[arg(long)]
    all: bool,
    #[arg(long, default_value_t = 64)]
    size: usize,
    /// Output PNG, or output directory with --all
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long, default_value = "synthetic")]
    family: ShapeFamily,
    #[arg(long, default_value_t = 10)]
    classes: usize,
    #[arg(long, default_value_t = 50)]
    train_per_class: usize,
    #[arg(long, default_value_t = 50)]
    test_per_class: usize,
    #[arg(long)]
    templates: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output directory for images and manifest.jsonl
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// blur, brightness, contrast, displacement, occlusion, rotation or scaling
    #[arg(long)]
    technique: augbench_core::augment::Technique,
    /// Override a sampling range, e.g. --range factor=0.5:1.5 (repeatable)
    #[arg(long = "range", value_name = "NAME=LO:HI")]
    ranges: Vec<String>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GanTrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Template directory; built-in templates of the dataset's family otherwise
    #[arg(long)]
    templates: Option<PathBuf>,
    /// Experiment config whose [gan] section supplies defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    generator_layers: Option<usize>,
    #[arg(long)]
    discriminator_layers: Option<usize>,
    /// Base channel width of both networks
    #[arg(long)]
    base_channels: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    l1_weight: Option<f64>,
    /// Train on the best-quality N training samples
    #[arg(long)]
    subset: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Checkpoint path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct GanGenerateArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[command(flatten)]
    source: TemplateSource,
    #[arg(long = "class", conflicts_with = "novel", required_unless_present = "novel")]
    class: Option<usize>,
    /// Novel template name, e.g. "end speed limit 40"
    #[arg(long)]
    novel: Option<String>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct ClsTrainArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Experiment config whose [classifier] section supplies defaults
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// Flags shared by `evaluate` and `sweep`; each overrides the config file.
#[derive(Args, Debug, Default)]
struct RunOverrides {
    /// Run directory name
    #[arg(long)]
    name: Option<String>,
    /// Parent directory of run directories
    #[arg(long)]
    output_dir: Option<PathBuf>,
    /// Classifier trainings per technique or grid cell
    #[arg(long)]
    repeats: Option<usize>,
    /// Comma-separated classifier seeds (one per repeat)
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Override classifier.train.epochs
    #[arg(long)]
    classifier_epochs: Option<usize>,
    /// Override gan.train.epochs
    #[arg(long)]
    gan_epochs: Option<usize>,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Comma-separated techniques, e.g. none,contrast,pix2pix
    #[arg(long, value_delimiter = ',')]
    techniques: Option<Vec<augbench_core::eval::TechniqueId>>,
    #[command(flatten)]
    overrides: RunOverrides,
}

#[derive(Args, Debug)]
struct SweepArgs {
    /// Experiment config (TOML)
    #[arg(long)]
    config: PathBuf,
    /// Discriminator and generator depths, e.g. 3,4x2,4
    #[arg(long)]
    grid: Option<String>,
    /// Skip the unaugmented baseline row
    #[arg(long)]
    no_baseline: bool,
    #[command(flatten)]
    overrides: RunOverrides,
}

#[derive(Args, Debug)]
struct ReportArgs {
    /// results.json or sweep_results.json
    #[arg(long)]
    results: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
