//! Metrics and the repeated-training protocol: per-technique experiments
//! and the GAN depth sweep.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::{augment_dataset, AugmentationSpec, ParamRange, Technique};
use crate::classifier::{train_classifier, ClassifierConfig, TrainHyperparams};
use crate::dataset::{merge_datasets, Dataset, Split};
use crate::error::{Error, Result};
use crate::gan::{gan_augment_dataset, train_gan, DiscriminatorConfig, GanHistory, GanHyperparams, GanModel, GeneratorConfig};
use crate::render::{compose_pairs, TemplateLibrary};

/// Counts indexed `[true class][predicted class]`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    num_classes: usize,
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(num_classes: usize) -> Self {
        Self {
            num_classes,
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    /// Builds a matrix from explicit rows; every row must have one count
    /// per class.
    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let k = rows.len();
        if rows.iter().any(|r| r.len() != k) {
            return Err(Error::validation("confusion matrix must be square"));
        }
        Ok(Self {
            num_classes: k,
            counts: rows,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn rows(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sum(&self, truth: usize) -> u64 {
        self.counts[truth].iter().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes).map(|i| self.counts[i][i]).sum()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }
}

pub fn confusion_matrix(truth: &[usize], predicted: &[usize], num_classes: usize) -> Result<ConfusionMatrix> {
    if truth.len() != predicted.len() {
        return Err(Error::validation(format!(
            "label lists differ in length: {} true vs {} predicted",
            truth.len(),
            predicted.len()
        )));
    }
    let mut cm = ConfusionMatrix::zeros(num_classes);
    for (&t, &p) in truth.iter().zip(predicted) {
        if t >= num_classes || p >= num_classes {
            return Err(Error::validation(format!(
                "label pair ({t}, {p}) out of range for {num_classes} classes"
            )));
        }
        cm.counts[t][p] += 1;
    }
    Ok(cm)
}

/// Fraction of samples on the diagonal.
pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::validation("accuracy of an empty confusion matrix"));
    }
    Ok(cm.trace() as f64 / total as f64)
}

/// How classes without test samples enter the macro-averaged recall.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmptyClassPolicy {
    /// Leave them out of the average.
    #[default]
    Exclude,
    /// Count their recall as zero.
    Zero,
}

/// Macro-averaged recall over classes with at least one true sample.
pub fn balanced_accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    balanced_accuracy_with(cm, EmptyClassPolicy::Exclude)
}

pub fn balanced_accuracy_with(cm: &ConfusionMatrix, policy: EmptyClassPolicy) -> Result<f64> {
    let mut sum = 0.0;
    let mut classes = 0usize;
    let mut populated = 0usize;
    for i in 0..cm.num_classes() {
        let row = cm.row_sum(i);
        if row > 0 {
            sum += cm.get(i, i) as f64 / row as f64;
            populated += 1;
            classes += 1;
        } else if policy == EmptyClassPolicy::Zero {
            classes += 1;
        }
    }
    if populated == 0 {
        return Err(Error::validation("balanced accuracy needs at least one populated class"));
    }
    Ok(sum / classes as f64)
}

/// Summary of repeated runs. `std` uses the n-1 denominator and is 0 for a
/// single run.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunStats {
    pub mean: f64,
    pub std: f64,
    pub min: f64,
    pub max: f64,
    pub n_runs: usize,
}

impl RunStats {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::validation("statistics of zero runs"));
        }
        if let Some(v) = values.iter().find(|v| !v.is_finite()) {
            return Err(Error::validation(format!("non-finite run value {v}")));
        }
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let (min, max) = (sorted[0], sorted[n - 1]);
        if min == max {
            return Ok(Self {
                mean: min,
                std: 0.0,
                min,
                max,
                n_runs: n,
            });
        }
        let mean = (sorted.iter().sum::<f64>() / n as f64).clamp(min, max);
        let std = if n > 1 {
            (sorted.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std,
            min,
            max,
            n_runs: n,
        })
    }
}

/// Seeds `1..=repeats`.
pub fn default_seeds(repeats: usize) -> Vec<u64> {
    (1..=repeats as u64).collect()
}

/// Training-set treatment compared by an experiment.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TechniqueId {
    None,
    Classic(Technique),
    Pix2pix,
}

impl TechniqueId {
    /// Every technique in table order.
    pub fn all() -> Vec<TechniqueId> {
        let mut v = vec![TechniqueId::None];
        v.extend(Technique::ALL.into_iter().map(TechniqueId::Classic));
        v.push(TechniqueId::Pix2pix);
        v
    }

    /// Row label used in reports.
    pub fn label(&self) -> String {
        match self {
            TechniqueId::None => "None".to_string(),
            TechniqueId::Pix2pix => "pix2pix".to_string(),
            TechniqueId::Classic(t) => {
                let name = t.name();
                name[..1].to_uppercase() + &name[1..]
            }
        }
    }
}

impl fmt::Display for TechniqueId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TechniqueId::None => f.write_str("none"),
            TechniqueId::Pix2pix => f.write_str("pix2pix"),
            TechniqueId::Classic(t) => write!(f, "{t}"),
        }
    }
}

impl FromStr for TechniqueId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "none" => Ok(TechniqueId::None),
            "pix2pix" => Ok(TechniqueId::Pix2pix),
            other => other.parse().map(TechniqueId::Classic),
        }
    }
}

impl Serialize for TechniqueId {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for TechniqueId {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Shared settings of every classifier run.
#[derive(Clone, Copy)]
pub struct ExperimentSetup<'a> {
    pub classifier: &'a ClassifierConfig,
    pub train: &'a TrainHyperparams,
    /// Seed of the classical augmentation streams.
    pub augment_seed: u64,
    /// Range overrides per classical technique; missing entries use defaults.
    pub augment_ranges: &'a BTreeMap<Technique, BTreeMap<String, ParamRange>>,
    /// Required for the pix2pix technique.
    pub gan: Option<&'a GanModel>,
    pub templates: Option<&'a TemplateLibrary>,
    pub empty_classes: EmptyClassPolicy,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub accuracy: f64,
    pub balanced_accuracy: f64,
    pub confusion: ConfusionMatrix,
}

/// Aggregated runs of one technique (one table row).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TechniqueResult {
    pub technique: TechniqueId,
    pub train_samples: usize,
    pub accuracy: RunStats,
    pub balanced_accuracy: RunStats,
    /// Runs in seed order.
    pub runs: Vec<RunOutcome>,
}

impl TechniqueResult {
    /// Aggregates runs; they are stored sorted by seed.
    pub fn from_runs(technique: TechniqueId, train_samples: usize, mut runs: Vec<RunOutcome>) -> Result<Self> {
        runs.sort_by_key(|r| r.seed);
        let acc: Vec<f64> = runs.iter().map(|r| r.accuracy).collect();
        let bal: Vec<f64> = runs.iter().map(|r| r.balanced_accuracy).collect();
        Ok(Self {
            technique,
            train_samples,
            accuracy: RunStats::from_values(&acc)?,
            balanced_accuracy: RunStats::from_values(&bal)?,
            runs,
        })
    }

    /// The run with median accuracy (lower median for an even count; ties
    /// broken by seed).
    pub fn median_run(&self) -> &RunOutcome {
        let mut order: Vec<&RunOutcome> = self.runs.iter().collect();
        order.sort_by(|a, b| a.accuracy.total_cmp(&b.accuracy).then(a.seed.cmp(&b.seed)));
        order[(order.len() - 1) / 2]
    }
}

/// Builds the training set a technique prescribes from the train split.
pub fn build_training_set(technique: TechniqueId, train: &Dataset, setup: &ExperimentSetup<'_>) -> Result<Dataset> {
    match technique {
        TechniqueId::None => Ok(train.clone()),
        TechniqueId::Classic(t) => {
            let mut spec = AugmentationSpec::with_defaults(t, setup.augment_seed);
            if let Some(over) = setup.augment_ranges.get(&t) {
                for (k, v) in over {
                    spec.ranges.insert(k.clone(), *v);
                }
            }
            augment_dataset(train, &spec)
        }
        TechniqueId::Pix2pix => {
            let (gan, templates) = setup
                .gan
                .zip(setup.templates)
                .ok_or_else(|| Error::config("pix2pix augmentation needs a trained GAN and a template library"))?;
            gan_augment_dataset(gan, train, templates)
        }
    }
}

fn train_and_score(training: &Dataset, test: &Dataset, seed: u64, setup: &ExperimentSetup<'_>) -> Result<RunOutcome> {
    let model = train_classifier(training, setup.classifier, setup.train, seed)?;
    let (truth, predicted) = model.evaluate(test)?;
    let cm = confusion_matrix(&truth, &predicted, test.num_classes())?;
    Ok(RunOutcome {
        seed,
        accuracy: accuracy(&cm)?,
        balanced_accuracy: balanced_accuracy_with(&cm, setup.empty_classes)?,
        confusion: cm,
    })
}

/// Builds the technique's training set once, then trains and evaluates one
/// classifier per seed on the untouched test split.
pub fn run_experiment(
    technique: TechniqueId,
    base: &Dataset,
    seeds: &[u64],
    setup: &ExperimentSetup<'_>,
) -> Result<TechniqueResult> {
    run_experiment_with_progress(technique, base, seeds, setup, &mut |_| {})
}

pub fn run_experiment_with_progress(
    technique: TechniqueId,
    base: &Dataset,
    seeds: &[u64],
    setup: &ExperimentSetup<'_>,
    on_run: &mut dyn FnMut(&RunOutcome),
) -> Result<TechniqueResult> {
    if seeds.is_empty() {
        return Err(Error::config("at least one repeat is required"));
    }
    let (train, test) = split_pair(base)?;
    let training = build_training_set(technique, &train, setup)?;
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let run = train_and_score(&training, &test, seed, setup)?;
        on_run(&run);
        runs.push(run);
    }
    TechniqueResult::from_runs(technique, training.len(), runs)
}

fn split_pair(base: &Dataset) -> Result<(Dataset, Dataset)> {
    let train = base.split(Split::Train);
    let test = base.split(Split::Test);
    if train.is_empty() {
        return Err(Error::validation("dataset has no training samples"));
    }
    if test.is_empty() {
        return Err(Error::validation("dataset has no test samples"));
    }
    Ok((train, test))
}

/// GAN settings shared by every sweep cell; depths come from the grid.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepGanSettings {
    pub generator_base_channels: usize,
    pub discriminator_base_channels: usize,
    pub hyper: GanHyperparams,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepCell {
    pub n_d: usize,
    pub n_g: usize,
    pub train_samples: usize,
    pub accuracy: RunStats,
    pub balanced_accuracy: RunStats,
    pub runs: Vec<RunOutcome>,
    pub gan_history: GanHistory,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    /// Classifier trained on the unaugmented training split.
    pub baseline: Option<TechniqueResult>,
    /// Cells in grid order.
    pub cells: Vec<SweepCell>,
}

/// For each `(n_d, n_g)`: trains a GAN on `gan_pool` paired with its
/// templates, generates one sample per pool image, adds the generated
/// samples to the base training split, and trains/evaluates the
/// classifier once per seed.
#[allow(clippy::too_many_arguments)]
pub fn sweep_gan(
    base: &Dataset,
    gan_pool: &Dataset,
    templates: &TemplateLibrary,
    grid: &[(usize, usize)],
    seeds: &[u64],
    gan: &SweepGanSettings,
    setup: &ExperimentSetup<'_>,
    include_baseline: bool,
) -> Result<SweepResult> {
    sweep_gan_with_progress(base, gan_pool, templates, grid, seeds, gan, setup, include_baseline, &mut |_| {})
}

#[allow(clippy::too_many_arguments)]
pub fn sweep_gan_with_progress(
    base: &Dataset,
    gan_pool: &Dataset,
    templates: &TemplateLibrary,
    grid: &[(usize, usize)],
    seeds: &[u64],
    gan: &SweepGanSettings,
    setup: &ExperimentSetup<'_>,
    include_baseline: bool,
    on_cell: &mut dyn FnMut(&SweepCell),
) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::config("sweep grid is empty"));
    }
    if seeds.is_empty() {
        return Err(Error::config("at least one repeat is required"));
    }
    for &(n_d, n_g) in grid {
        DiscriminatorConfig::new(n_d, gan.discriminator_base_channels).validate()?;
        GeneratorConfig::new(n_g, gan.generator_base_channels).validate()?;
    }
    let (train, test) = split_pair(base)?;
    let pairs = compose_pairs(gan_pool, templates)?;
    let baseline = if include_baseline {
        Some(run_experiment(TechniqueId::None, base, seeds, setup)?)
    } else {
        None
    };
    let mut cells = Vec::with_capacity(grid.len());
    for &(n_d, n_g) in grid {
        let model = train_gan(
            &pairs,
            &GeneratorConfig::new(n_g, gan.generator_base_channels),
            &DiscriminatorConfig::new(n_d, gan.discriminator_base_channels),
            &gan.hyper,
            gan.seed,
        )?;
        let augmented = gan_augment_dataset(&model, gan_pool, templates)?;
        let generated = augmented.with_samples(augmented.samples()[gan_pool.len()..].to_vec())?;
        let training = merge_datasets(&train, &generated)?;
        let runs = seeds
            .iter()
            .map(|&seed| train_and_score(&training, &test, seed, setup))
            .collect::<Result<Vec<_>>>()?;
        let row = TechniqueResult::from_runs(TechniqueId::Pix2pix, training.len(), runs)?;
        let cell = SweepCell {
            n_d,
            n_g,
            train_samples: row.train_samples,
            accuracy: row.accuracy,
            balanced_accuracy: row.balanced_accuracy,
            runs: row.runs,
            gan_history: model.history.clone(),
        };
        on_cell(&cell);
        cells.push(cell);
    }
    Ok(SweepResult { baseline, cells })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn confusion_examples() {
        let cm = confusion_matrix(&[0, 1], &[0, 1], 2).unwrap();
        assert_eq!(cm.rows(), &[vec![1, 0], vec![0, 1]]);
        let cm = confusion_matrix(&[0, 0], &[1, 1], 2).unwrap();
        assert_eq!(cm.rows(), &[vec![0, 2], vec![0, 0]]);
        assert!(confusion_matrix(&[0], &[0, 1], 2).is_err());
        assert!(confusion_matrix(&[0, 2], &[0, 1], 2).is_err());
    }

    #[test]
    fn accuracy_examples() {
        let cm = ConfusionMatrix::from_rows(vec![vec![5, 5], vec![0, 10]]).unwrap();
        assert_eq!(accuracy(&cm).unwrap(), 0.75);
        assert_eq!(balanced_accuracy(&cm).unwrap(), 0.75);
        let id = ConfusionMatrix::from_rows(vec![vec![3, 0], vec![0, 4]]).unwrap();
        assert_eq!(accuracy(&id).unwrap(), 1.0);
        assert_eq!(balanced_accuracy(&id).unwrap(), 1.0);
        assert!(accuracy(&ConfusionMatrix::zeros(3)).is_err());
        assert!(balanced_accuracy(&ConfusionMatrix::zeros(3)).is_err());
    }

    #[test]
    fn empty_row_policy() {
        let cm = ConfusionMatrix::from_rows(vec![vec![2, 2, 0], vec![0, 0, 0], vec![1, 0, 3]]).unwrap();
        assert_eq!(balanced_accuracy(&cm).unwrap(), (0.5 + 0.75) / 2.0);
        assert_eq!(
            balanced_accuracy_with(&cm, EmptyClassPolicy::Zero).unwrap(),
            (0.5 + 0.75) / 3.0
        );
    }

    #[test]
    fn run_stats_conventions() {
        let one = RunStats::from_values(&[0.9]).unwrap();
        assert_eq!((one.mean, one.std, one.min, one.max, one.n_runs), (0.9, 0.0, 0.9, 0.9, 1));
        let same = RunStats::from_values(&[0.1, 0.1, 0.1]).unwrap();
        assert_eq!((same.mean, same.std), (0.1, 0.0));
        let s = RunStats::from_values(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(s.mean, 2.5);
        assert!((s.std - (5.0f64 / 3.0).sqrt()).abs() < 1e-12);
        assert!(RunStats::from_values(&[]).is_err());
        assert!(RunStats::from_values(&[f64::NAN]).is_err());
    }

    #[test]
    fn technique_ids_parse_and_label() {
        assert_eq!("none".parse::<TechniqueId>().unwrap(), TechniqueId::None);
        assert_eq!("pix2pix".parse::<TechniqueId>().unwrap(), TechniqueId::Pix2pix);
        assert_eq!(
            "contrast".parse::<TechniqueId>().unwrap(),
            TechniqueId::Classic(Technique::Contrast)
        );
        assert!("sharpen".parse::<TechniqueId>().is_err());
        let labels: Vec<String> = TechniqueId::all().iter().map(|t| t.label()).collect();
        assert_eq!(
            labels,
            ["None", "Blur", "Brightness", "Contrast", "Displacement", "Occlusion", "Rotation", "Scaling", "pix2pix"]
        );
        let json = serde_json::to_string(&TechniqueId::Classic(Technique::Blur)).unwrap();
        assert_eq!(json, "\"blur\"");
        assert_eq!(serde_json::from_str::<TechniqueId>(&json).unwrap(), TechniqueId::Classic(Technique::Blur));
    }

    #[test]
    fn median_run_selection() {
        let run = |seed, accuracy| RunOutcome {
            seed,
            accuracy,
            balanced_accuracy: accuracy,
            confusion: ConfusionMatrix::zeros(1),
        };
        let r = TechniqueResult::from_runs(
            TechniqueId::None,
            10,
            vec![run(3, 0.9), run(1, 0.5), run(2, 0.7), run(4, 0.8)],
        )
        .unwrap();
        assert_eq!(r.runs.iter().map(|r| r.seed).collect::<Vec<_>>(), [1, 2, 3, 4]);
        assert_eq!(r.median_run().seed, 2);
    }

    fn brute_force(truth: &[usize], pred: &[usize], k: usize) -> Vec<Vec<u64>> {
        (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| truth.iter().zip(pred).filter(|&(&t, &p)| t == i && p == j).count() as u64)
                    .collect()
            })
            .collect()
    }

    fn labels() -> impl Strategy<Value = (usize, Vec<(usize, usize)>)> {
        (2usize..12).prop_flat_map(|k| (Just(k), proptest::collection::vec((0..k, 0..k), 1..300)))
    }

    proptest! {
        #[test]
        fn matrix_matches_pairwise_counting((k, pairs) in labels()) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let cm = confusion_matrix(&t, &p, k).unwrap();
            let expected = brute_force(&t, &p, k);
            prop_assert_eq!(cm.rows(), expected.as_slice());
            for c in 0..k {
                prop_assert_eq!(cm.row_sum(c), t.iter().filter(|&&x| x == c).count() as u64);
            }
            let direct = t.iter().zip(&p).filter(|(a, b)| a == b).count() as f64 / t.len() as f64;
            prop_assert_eq!(accuracy(&cm).unwrap(), direct);
        }

        #[test]
        fn balanced_accuracy_row_scaling_invariance((k, pairs) in labels(), row in 0usize..12, factor in 2u64..6) {
            let (t, p): (Vec<usize>, Vec<usize>) = pairs.into_iter().unzip();
            let cm = confusion_matrix(&t, &p, k).unwrap();
            let row = row % k;
            let mut rows = cm.rows().to_vec();
            rows[row].iter_mut().for_each(|v| *v *= factor);
            let scaled = ConfusionMatrix::from_rows(rows).unwrap();
            let a = balanced_accuracy(&cm).unwrap();
            let b = balanced_accuracy(&scaled).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn uniform_class_counts_make_balanced_equal_plain(k in 2usize..8, per in 1u64..20, seed in any::<u64>()) {
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            let rows: Vec<Vec<u64>> = (0..k)
                .map(|_| {
                    let mut row = vec![0u64; k];
                    for _ in 0..per {
                        row[rand::Rng::random_range(&mut rng, 0..k)] += 1;
                    }
                    row
                })
                .collect();
            let cm = ConfusionMatrix::from_rows(rows).unwrap();
            prop_assert!((accuracy(&cm).unwrap() - balanced_accuracy(&cm).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn run_stats_permutation_invariant(mut v in proptest::collection::vec(0.0f64..1.0, 1..10), seed in any::<u64>()) {
            let a = RunStats::from_values(&v).unwrap();
            let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(seed);
            rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut rng);
            let b = RunStats::from_values(&v).unwrap();
            prop_assert_eq!(a, b);
            prop_assert!(a.min <= a.mean && a.mean <= a.max && a.std >= 0.0);
        }
    }
}
