//! TOML experiment configuration.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use augbench_core::augment::{AugmentationSpec, ParamRange, Technique};
use augbench_core::classifier::{ClassifierConfig, TrainHyperparams};
use augbench_core::dataset::ShapeFamily;
use augbench_core::eval::{default_seeds, EmptyClassPolicy, TechniqueId};
use augbench_core::gan::{DiscriminatorConfig, GanHyperparams, GeneratorConfig, DISCRIMINATOR_DEPTHS, GENERATOR_DEPTHS};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Run directory name under `output_dir`.
    pub name: String,
    #[serde(default = "default_output_dir")]
    pub output_dir: PathBuf,
    pub data: DataSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub augment: AugmentSection,
    #[serde(default)]
    pub classifier: ClassifierSection,
    #[serde(default)]
    pub gan: GanSection,
    #[serde(default)]
    pub sweep: SweepSection,
}

fn default_output_dir() -> PathBuf {
    PathBuf::from("runs")
}

/// Either an existing manifest or a synthetic dataset description.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub manifest: Option<PathBuf>,
    /// Directory of `<class>.json` sign templates; built-in templates
    /// otherwise.
    pub templates: Option<PathBuf>,
    pub synthetic: Option<SyntheticSection>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    #[serde(default = "default_family")]
    pub family: ShapeFamily,
    pub classes: usize,
    pub train_per_class: usize,
    pub test_per_class: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_family() -> ShapeFamily {
    ShapeFamily::Synthetic
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub title: String,
    pub techniques: Vec<TechniqueId>,
    pub repeats: usize,
    /// Defaults to `1..=repeats`.
    pub seeds: Option<Vec<u64>>,
    pub empty_classes: EmptyClassPolicy,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            title: "Augmentation comparison".to_string(),
            techniques: TechniqueId::all(),
            repeats: 5,
            seeds: None,
            empty_classes: EmptyClassPolicy::Exclude,
        }
    }
}

impl ExperimentSection {
    pub fn seeds(&self) -> Vec<u64> {
        self.seeds.clone().unwrap_or_else(|| default_seeds(self.repeats))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AugmentSection {
    #[serde(default)]
    pub seed: u64,
    /// Per-technique overrides keyed by parameter name.
    #[serde(default)]
    pub ranges: BTreeMap<Technique, BTreeMap<String, ParamRange>>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierSection {
    pub stem_channels: Option<usize>,
    pub fire_module_widths: Option<Vec<(usize, usize)>>,
    pub pool_after: Option<Vec<usize>>,
    pub batch_norm: Option<bool>,
    #[serde(default)]
    pub train: TrainHyperparams,
}

impl ClassifierSection {
    pub fn build(&self, num_classes: usize) -> ClassifierConfig {
        let mut cfg = ClassifierConfig::new(num_classes);
        if let Some(v) = self.stem_channels {
            cfg.stem_channels = v;
        }
        if let Some(v) = &self.fire_module_widths {
            cfg.fire_module_widths = v.clone();
        }
        if let Some(v) = &self.pool_after {
            cfg.pool_after = v.clone();
        }
        if let Some(v) = self.batch_norm {
            cfg.batch_norm = v;
        }
        cfg
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanSection {
    pub generator_layers: usize,
    pub discriminator_layers: usize,
    pub generator_base_channels: usize,
    pub discriminator_base_channels: usize,
    /// Size of the best-quality training subset paired with templates; the
    /// whole training split when absent.
    pub subset: Option<usize>,
    pub seed: u64,
    /// Pretrained model; training is skipped when set.
    pub checkpoint: Option<PathBuf>,
    pub train: GanHyperparams,
}

impl Default for GanSection {
    fn default() -> Self {
        let g = GeneratorConfig::default();
        let d = DiscriminatorConfig::default();
        Self {
            generator_layers: g.n_conv_layers,
            discriminator_layers: d.n_conv_layers,
            generator_base_channels: g.base_channels,
            discriminator_base_channels: d.base_channels,
            subset: None,
            seed: 0,
            checkpoint: None,
            train: GanHyperparams::default(),
        }
    }
}

impl GanSection {
    pub fn generator(&self) -> GeneratorConfig {
        GeneratorConfig::new(self.generator_layers, self.generator_base_channels)
    }

    pub fn discriminator(&self) -> DiscriminatorConfig {
        DiscriminatorConfig::new(self.discriminator_layers, self.discriminator_base_channels)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub title: String,
    pub discriminator_layers: Vec<usize>,
    pub generator_layers: Vec<usize>,
    /// Adds a row trained without augmentation.
    pub baseline: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            title: "GAN depth sweep".to_string(),
            discriminator_layers: DISCRIMINATOR_DEPTHS.to_vec(),
            generator_layers: GENERATOR_DEPTHS.to_vec(),
            baseline: true,
        }
    }
}

impl SweepSection {
    /// Cells in discriminator-major order.
    pub fn grid(&self) -> Vec<(usize, usize)> {
        self.discriminator_layers
            .iter()
            .flat_map(|&d| self.generator_layers.iter().map(move |&g| (d, g)))
            .collect()
    }
}

/// Parses `3,4x2,4` into discriminator and generator depth lists.
pub fn parse_grid(text: &str) -> Result<(Vec<usize>, Vec<usize>)> {
    let (d, g) = text
        .split_once('x')
        .with_context(|| format!("grid {text:?} must look like 3,4x2,4"))?;
    let list = |s: &str| -> Result<Vec<usize>> {
        s.split(',')
            .map(|v| v.trim().parse::<usize>().with_context(|| format!("bad depth {v:?} in grid {text:?}")))
            .collect()
    };
    Ok((list(d)?, list(g)?))
}

/// Parses `name=lo:hi`.
pub fn parse_range(text: &str) -> Result<(String, ParamRange)> {
    let (name, range) = text
        .split_once('=')
        .with_context(|| format!("range {text:?} must look like name=lo:hi"))?;
    let (lo, hi) = range
        .split_once(':')
        .with_context(|| format!("range {text:?} must look like name=lo:hi"))?;
    Ok((name.trim().to_string(), ParamRange::new(lo.trim().parse()?, hi.trim().parse()?)))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("cannot read config {}", path.display()))?;
        let cfg: Self = toml::from_str(&text).with_context(|| format!("invalid config {}", path.display()))?;
        let cfg = cfg.resolve_paths(path.parent().unwrap_or(Path::new(".")));
        Ok(cfg)
    }

    /// Makes relative data and checkpoint paths relative to the config file.
    fn resolve_paths(mut self, base: &Path) -> Self {
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(path) = p {
                if path.is_relative() {
                    *path = base.join(&*path);
                }
            }
        };
        fix(&mut self.data.manifest);
        fix(&mut self.data.templates);
        fix(&mut self.gan.checkpoint);
        self
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn run_dir(&self) -> PathBuf {
        self.output_dir.join(&self.name)
    }

    /// Checks everything that can be checked before any training starts;
    /// returns warnings for legal but unusual settings.
    pub fn validate(&self) -> Result<Vec<String>> {
        ensure!(
            self.schema_version == SCHEMA_VERSION,
            "unsupported schema_version {} (expected {SCHEMA_VERSION})",
            self.schema_version
        );
        ensure!(
            !self.name.is_empty() && !self.name.contains(['/', '\\']) && self.name != "." && self.name != "..",
            "run name {:?} must be a plain directory name",
            self.name
        );
        match (&self.data.manifest, &self.data.synthetic) {
            (Some(_), Some(_)) => bail!("data.manifest and data.synthetic are mutually exclusive"),
            (None, None) => bail!("either data.manifest or data.synthetic is required"),
            (Some(m), None) => ensure!(m.is_file(), "manifest not found: {}", m.display()),
            (None, Some(s)) => {
                ensure!(s.classes >= 1, "data.synthetic.classes must be >= 1");
                ensure!(
                    s.train_per_class >= 1 && s.test_per_class >= 1,
                    "data.synthetic needs at least one train and one test sample per class"
                );
            }
        }
        if let Some(t) = &self.data.templates {
            ensure!(t.is_dir(), "template directory not found: {}", t.display());
        }
        let exp = &self.experiment;
        ensure!(exp.repeats >= 1, "experiment.repeats must be >= 1");
        ensure!(!exp.techniques.is_empty(), "experiment.techniques is empty");
        if let Some(seeds) = &exp.seeds {
            ensure!(
                seeds.len() == exp.repeats,
                "experiment.seeds has {} entries but repeats = {}",
                seeds.len(),
                exp.repeats
            );
        }
        for (technique, ranges) in &self.augment.ranges {
            let mut spec = AugmentationSpec::with_defaults(*technique, self.augment.seed);
            for (name, range) in ranges {
                ensure!(
                    technique.param_names().contains(&name.as_str()),
                    "{technique} has no parameter {name:?} (expected one of {:?})",
                    technique.param_names()
                );
                spec.ranges.insert(name.clone(), *range);
            }
            spec.ordered_ranges()?;
        }
        let classes = self.data.synthetic.as_ref().map_or(2, |s| s.classes);
        self.classifier.build(classes).validate()?;
        self.classifier.train.validate()?;
        let mut warnings = Vec::new();
        if let Some(c) = &self.gan.checkpoint {
            ensure!(c.is_file(), "GAN checkpoint not found: {}", c.display());
        } else {
            warnings.extend(self.gan.generator().validate()?);
            self.gan.discriminator().validate()?;
            self.gan.train.validate()?;
        }
        ensure!(self.gan.subset != Some(0), "gan.subset must be >= 1");
        ensure!(
            !self.sweep.discriminator_layers.is_empty() && !self.sweep.generator_layers.is_empty(),
            "sweep grid is empty"
        );
        for &n in &self.sweep.discriminator_layers {
            DiscriminatorConfig::new(n, self.gan.discriminator_base_channels).validate()?;
        }
        for &n in &self.sweep.generator_layers {
            for w in GeneratorConfig::new(n, self.gan.generator_base_channels).validate()? {
                if !warnings.contains(&w) {
                    warnings.push(w);
                }
            }
        }
        Ok(warnings)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("3,4x2,4").unwrap(), (vec![3, 4], vec![2, 4]));
        assert_eq!(parse_grid("4x6").unwrap(), (vec![4], vec![6]));
        assert!(parse_grid("3,4").is_err());
        assert!(parse_grid("3,ax2").is_err());
    }

    #[test]
    fn range_parsing() {
        let (name, r) = parse_range("factor=0.5:1.5").unwrap();
        assert_eq!(name, "factor");
        assert_eq!(r, ParamRange::new(0.5, 1.5));
        assert!(parse_range("factor").is_err());
        assert!(parse_range("factor=1").is_err());
    }

    #[test]
    fn sweep_grid_is_discriminator_major() {
        let s = SweepSection {
            discriminator_layers: vec![3, 4],
            generator_layers: vec![2, 4],
            ..Default::default()
        };
        assert_eq!(s.grid(), [(3, 2), (3, 4), (4, 2), (4, 4)]);
    }
}
