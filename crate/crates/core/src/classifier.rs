//! SqueezeNet-style classifier for small square sign images.
//!
//! The layer stack is a scaled-down SqueezeNet: a stride-2 3x3 stem,
//! max-pooling, a stack of fire modules with further pooling stages, a 1x1
//! classifier convolution and global average pooling into class logits.

use std::path::Path;
use std::sync::Mutex;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Archive;
use crate::dataset::{Dataset, Split};
use crate::error::{Error, Result};
use crate::nn::layers::{join, Visitor};
use crate::nn::loss::{softmax, softmax_cross_entropy};
use crate::nn::tensor::{concat_channels, split_channels};
use crate::nn::{
    count_trainable, rasters_to_tensor, Adam, AdamConfig, BatchNorm2d, Conv2d, Float, GlobalAvgPool, Init, Layer,
    LeakyRelu, MaxPool2d, Sequential, Tensor,
};
use crate::raster::{Raster, IMAGE_SIZE};
use crate::seed::rng_for;

const CHECKPOINT_KIND: &str = "squeezenet";
const PREDICT_CHUNK: usize = 256;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassifierConfig {
    pub num_classes: usize,
    /// `(squeeze, expand)` channel pairs; each fire module outputs
    /// `2 * expand` channels.
    pub fire_module_widths: Vec<(usize, usize)>,
    /// Fire-module indices followed by a 2x2 max-pool.
    #[serde(default = "default_pool_after")]
    pub pool_after: Vec<usize>,
    #[serde(default = "default_stem")]
    pub stem_channels: usize,
    #[serde(default = "default_batch_norm")]
    pub batch_norm: bool,
    #[serde(default = "default_input")]
    pub input_size: usize,
}

fn default_pool_after() -> Vec<usize> {
    vec![1, 3]
}

fn default_stem() -> usize {
    32
}

fn default_batch_norm() -> bool {
    true
}

fn default_input() -> usize {
    IMAGE_SIZE
}

impl ClassifierConfig {
    pub fn new(num_classes: usize) -> Self {
        Self {
            num_classes,
            fire_module_widths: vec![(16, 32), (16, 32), (32, 64), (32, 64), (48, 96)],
            pool_after: default_pool_after(),
            stem_channels: default_stem(),
            batch_norm: default_batch_norm(),
            input_size: IMAGE_SIZE,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::config("classifier needs at least 2 classes"));
        }
        if self.fire_module_widths.is_empty() {
            return Err(Error::config("classifier needs at least one fire module"));
        }
        if let Some(&(s, e)) = self.fire_module_widths.iter().find(|(s, e)| *s == 0 || *e == 0) {
            return Err(Error::config(format!("invalid fire module widths ({s}, {e})")));
        }
        if self.stem_channels == 0 {
            return Err(Error::config("stem_channels must be positive"));
        }
        if let Some(&i) = self.pool_after.iter().find(|&&i| i >= self.fire_module_widths.len()) {
            return Err(Error::config(format!("pool_after index {i} has no fire module")));
        }
        let pools = 1 + self.pool_after.len();
        if self.input_size / 2 >> pools == 0 {
            return Err(Error::config(format!(
                "input size {} is too small for {pools} pooling stages",
                self.input_size
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainHyperparams {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    #[serde(default = "default_betas")]
    pub optimizer_betas: (f64, f64),
}

fn default_betas() -> (f64, f64) {
    (0.9, 0.999)
}

impl Default for TrainHyperparams {
    fn default() -> Self {
        Self {
            epochs: 100,
            learning_rate: 0.01,
            batch_size: 64,
            optimizer_betas: default_betas(),
        }
    }
}

impl TrainHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("classifier epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("classifier batch_size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("classifier learning_rate must be positive"));
        }
        Ok(())
    }
}

/// Per-epoch mean training loss and running training accuracy.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    pub loss: Vec<f64>,
    pub accuracy: Vec<f64>,
}

impl TrainHistory {
    pub fn len(&self) -> usize {
        self.loss.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loss.is_empty()
    }
}

/// Squeeze 1x1 conv feeding parallel 1x1 and 3x3 expand convs whose
/// outputs are concatenated.
pub struct Fire<T> {
    squeeze: Sequential<T>,
    expand1: Sequential<T>,
    expand3: Sequential<T>,
    expand: usize,
}

impl<T: Float> Fire<T> {
    pub fn new(cin: usize, squeeze: usize, expand: usize, bn: bool, rng: &mut impl rand::Rng) -> Self {
        let block = |conv: Conv2d<T>, c: usize| {
            let s = Sequential::new().push("conv", conv);
            let s = if bn { s.push("bn", BatchNorm2d::new(c)) } else { s };
            s.push("relu", LeakyRelu::relu())
        };
        Self {
            squeeze: block(Conv2d::new(cin, squeeze, 1, 1, 0, !bn, Init::Kaiming, rng), squeeze),
            expand1: block(Conv2d::new(squeeze, expand, 1, 1, 0, !bn, Init::Kaiming, rng), expand),
            expand3: block(Conv2d::new(squeeze, expand, 3, 1, 1, !bn, Init::Kaiming, rng), expand),
            expand,
        }
    }
}

impl<T: Float> Layer<T> for Fire<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Tensor<T> {
        let s = self.squeeze.forward(x, train);
        let a = self.expand1.forward(&s, train);
        let b = self.expand3.forward(&s, train);
        concat_channels(&[&a, &b])
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let parts = split_channels(grad, &[self.expand, self.expand]);
        let mut gs = self.expand1.backward(&parts[0]);
        gs.add_assign(&self.expand3.backward(&parts[1]));
        self.squeeze.backward(&gs)
    }

    fn visit(&mut self, prefix: &str, f: &mut Visitor<'_, T>) {
        self.squeeze.visit(&join(prefix, "squeeze"), f);
        self.expand1.visit(&join(prefix, "expand1"), f);
        self.expand3.visit(&join(prefix, "expand3"), f);
    }
}

/// Builds the classifier network; `forward` yields `[n, k, 1, 1]` logits.
pub fn build_classifier<T: Float>(config: &ClassifierConfig, seed: u64) -> Result<Sequential<T>> {
    config.validate()?;
    let mut rng = rng_for(seed, &[0x636c_73]);
    let bn = config.batch_norm;
    let mut net = Sequential::new().push(
        "stem",
        Conv2d::new(3, config.stem_channels, 3, 2, 1, !bn, Init::Kaiming, &mut rng),
    );
    if bn {
        net = net.push("stem_bn", BatchNorm2d::new(config.stem_channels));
    }
    net = net.push("stem_relu", LeakyRelu::relu()).push("pool0", MaxPool2d::new(2));
    let mut cin = config.stem_channels;
    for (i, &(s, e)) in config.fire_module_widths.iter().enumerate() {
        net = net.push(&format!("fire{i}"), Fire::new(cin, s, e, bn, &mut rng));
        cin = 2 * e;
        if config.pool_after.contains(&i) {
            net = net.push(&format!("pool_fire{i}"), MaxPool2d::new(2));
        }
    }
    Ok(net
        .push(
            "classifier",
            Conv2d::new(cin, config.num_classes, 1, 1, 0, true, Init::Normal(0.01), &mut rng),
        )
        .push("gap", GlobalAvgPool::new()))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// A trained classifier with its training history.
pub struct TrainedClassifier {
    pub config: ClassifierConfig,
    pub hyper: TrainHyperparams,
    pub history: TrainHistory,
    network: Mutex<Sequential<f32>>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    config: ClassifierConfig,
    hyper: TrainHyperparams,
    history: TrainHistory,
}

impl TrainedClassifier {
    /// An untrained classifier with freshly initialized weights.
    pub fn new(config: &ClassifierConfig, hyper: &TrainHyperparams, seed: u64) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            config: config.clone(),
            hyper: *hyper,
            history: TrainHistory::default(),
            network: Mutex::new(build_classifier(config, seed)?),
        })
    }

    /// Class probabilities for each image.
    pub fn probabilities(&self, images: &[&Raster]) -> Result<Vec<Vec<f64>>> {
        let mut net = self.network.lock().expect("classifier lock");
        let mut out = Vec::with_capacity(images.len());
        for chunk in images.chunks(PREDICT_CHUNK) {
            let x = rasters_to_tensor::<f32>(chunk, self.config.input_size, 0.0, 1.0)?;
            out.extend(softmax(&net.forward(&x, false)));
        }
        Ok(out)
    }

    /// Predicted class per image, in input order.
    pub fn predict(&self, images: &[&Raster]) -> Result<Vec<usize>> {
        Ok(self.probabilities(images)?.iter().map(|p| argmax(p)).collect())
    }

    pub fn predict_one(&self, image: &Raster) -> Result<usize> {
        Ok(self.predict(&[image])?[0])
    }

    /// True and predicted labels over every sample of `dataset`.
    pub fn evaluate(&self, dataset: &Dataset) -> Result<(Vec<usize>, Vec<usize>)> {
        let images: Vec<&Raster> = dataset.samples().iter().map(|s| &*s.pixels).collect();
        Ok((dataset.labels(), self.predict(&images)?))
    }

    pub fn parameter_count(&self) -> usize {
        count_trainable(&mut *self.network.lock().expect("classifier lock"))
    }

    pub fn to_archive(&self) -> Result<Archive> {
        let meta = serde_json::to_value(CheckpointMeta {
            config: self.config.clone(),
            hyper: self.hyper,
            history: self.history.clone(),
        })?;
        let mut archive = Archive::new(CHECKPOINT_KIND, meta);
        archive.store_model("classifier", &mut *self.network.lock().expect("classifier lock"))?;
        Ok(archive)
    }

    pub fn from_archive(archive: &Archive) -> Result<Self> {
        archive.expect_kind(CHECKPOINT_KIND)?;
        let meta: CheckpointMeta = serde_json::from_value(archive.meta.clone())?;
        let mut model = Self::new(&meta.config, &meta.hyper, 0)?;
        model.history = meta.history;
        archive.restore_model("classifier", model.network.get_mut().expect("classifier lock"))?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_archive()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_archive(&Archive::load(path)?)
    }
}

/// Trains on the train split of `dataset` with Adam and cross-entropy for
/// exactly `hyper.epochs` epochs. Both weight initialization and batch
/// order derive from `seed`.
pub fn train_classifier(
    dataset: &Dataset,
    config: &ClassifierConfig,
    hyper: &TrainHyperparams,
    seed: u64,
) -> Result<TrainedClassifier> {
    let train = dataset.split(Split::Train);
    if train.is_empty() {
        return Err(Error::validation("training split is empty"));
    }
    if config.num_classes != dataset.num_classes() {
        return Err(Error::config(format!(
            "classifier has {} classes but the dataset has {}",
            config.num_classes,
            dataset.num_classes()
        )));
    }
    let mut model = TrainedClassifier::new(config, hyper, seed)?;
    let net = model.network.get_mut().expect("classifier lock");
    let mut opt = Adam::new(AdamConfig::new(
        hyper.learning_rate,
        hyper.optimizer_betas.0,
        hyper.optimizer_betas.1,
    ));
    let mut order_rng = rng_for(seed, &[0x6f72_64]);
    let samples = train.samples();
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut history = TrainHistory::default();
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut order_rng);
        let (mut loss_sum, mut correct) = (0.0, 0usize);
        for (b, idx) in order.chunks(hyper.batch_size).enumerate() {
            let images: Vec<&Raster> = idx.iter().map(|&i| &*samples[i].pixels).collect();
            let labels: Vec<usize> = idx.iter().map(|&i| samples[i].class_index).collect();
            let x = rasters_to_tensor::<f32>(&images, config.input_size, 0.0, 1.0)?;
            let logits = net.forward(&x, true);
            let (loss, grad) = softmax_cross_entropy(&logits, &labels);
            if !loss.is_finite() {
                return Err(Error::NonFinite {
                    what: "classifier loss",
                    epoch,
                    batch: b,
                });
            }
            correct += logits
                .data()
                .chunks(config.num_classes)
                .zip(&labels)
                .filter(|(row, &y)| argmax(&row.iter().map(|v| v.as_f64()).collect::<Vec<_>>()) == y)
                .count();
            loss_sum += loss * idx.len() as f64;
            net.backward(&grad);
            opt.step(net);
        }
        history.loss.push(loss_sum / samples.len() as f64);
        history.accuracy.push(correct as f64 / samples.len() as f64);
    }
    model.history = history;
    Ok(model)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::ShapeFamily;
    use crate::render::{synthesize_dataset, TemplateLibrary};
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn argmax_examples() {
        assert_eq!(argmax(&[0.1, 0.7, 0.2]), 1);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    proptest! {
        #[test]
        fn argmax_invariant_under_monotone_maps(v in proptest::collection::vec(-5.0f64..5.0, 2..12), a in 0.1f64..4.0, b in -3.0f64..3.0) {
            let base = argmax(&v);
            let affine: Vec<f64> = v.iter().map(|x| a * x + b).collect();
            let cubic: Vec<f64> = v.iter().map(|x| x.powi(3) + x).collect();
            let exp: Vec<f64> = v.iter().map(|x| x.exp()).collect();
            prop_assert_eq!(argmax(&affine), base);
            prop_assert_eq!(argmax(&cubic), base);
            prop_assert_eq!(argmax(&exp), base);
        }
    }

    #[test]
    fn output_lengths_and_softmax_normalization() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for (k, bn) in [(36, true), (16, false)] {
            let mut cfg = ClassifierConfig::new(k);
            cfg.batch_norm = bn;
            let model = TrainedClassifier::new(&cfg, &TrainHyperparams::default(), 3).unwrap();
            let imgs: Vec<Raster> = (0..3)
                .map(|_| Raster::from_fn(64, 64, |_, _| [rng.random(), rng.random(), rng.random()]))
                .collect();
            let refs: Vec<&Raster> = imgs.iter().collect();
            let probs = model.probabilities(&refs).unwrap();
            assert_eq!(probs.len(), 3);
            for p in probs {
                assert_eq!(p.len(), k);
                assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn config_errors() {
        assert!(ClassifierConfig::new(1).validate().is_err());
        let mut cfg = ClassifierConfig::new(5);
        cfg.fire_module_widths.clear();
        assert!(cfg.validate().is_err());
        let mut cfg = ClassifierConfig::new(5);
        cfg.fire_module_widths[0] = (0, 4);
        assert!(cfg.validate().is_err());
        let mut cfg = ClassifierConfig::new(5);
        cfg.pool_after = vec![9];
        assert!(cfg.validate().is_err());
        let model = TrainedClassifier::new(&ClassifierConfig::new(5), &TrainHyperparams::default(), 0).unwrap();
        assert!(matches!(model.predict_one(&Raster::new(32, 32)), Err(Error::Dimension { .. })));
    }

    fn small_set(classes: usize, per_class: usize, seed: u64) -> Dataset {
        let lib = TemplateLibrary::builtin(ShapeFamily::Synthetic, classes).unwrap();
        synthesize_dataset(&lib, per_class, 1, seed).unwrap()
    }

    #[test]
    fn one_epoch_history_determinism_and_checkpoint() {
        let ds = small_set(2, 5, 1);
        let hyper = TrainHyperparams {
            epochs: 1,
            batch_size: 4,
            ..Default::default()
        };
        let cfg = ClassifierConfig::new(2);
        let a = train_classifier(&ds, &cfg, &hyper, 7).unwrap();
        let b = train_classifier(&ds, &cfg, &hyper, 7).unwrap();
        assert_eq!(a.history.len(), 1);
        assert_eq!(a.history, b.history);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.ckpt");
        a.save(&path).unwrap();
        let back = TrainedClassifier::load(&path).unwrap();
        let test = ds.split(Split::Test);
        assert_eq!(back.evaluate(&test).unwrap(), a.evaluate(&test).unwrap());
        assert_eq!(back.history, a.history);
    }

    #[test]
    fn training_errors() {
        let ds = small_set(2, 2, 1);
        let hyper = TrainHyperparams::default();
        assert!(train_classifier(&ds.split(Split::Test).empty_like(), &ClassifierConfig::new(2), &hyper, 0).is_err());
        assert!(train_classifier(&ds.split(Split::Test), &ClassifierConfig::new(2), &hyper, 0).is_err());
        assert!(train_classifier(&ds, &ClassifierConfig::new(3), &hyper, 0).is_err());
    }
}
