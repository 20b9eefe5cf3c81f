//! Paired image-to-image translation GAN: a U-Net style encoder-decoder
//! generator conditioned on a symbolic sign image, and a patch-scoring
//! discriminator over (condition, candidate) pairs.
//!
//! Architecture defaults (normalization, activations, initialization,
//! optimizer settings) follow the usual pix2pix conventions; they are
//! configurable defaults rather than values fixed by the benchmark.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::{Arc, Mutex};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Archive;
use crate::dataset::{Dataset, ImageSample};
use crate::error::{Error, Result};
use crate::nn::loss::{bce_with_logits, l1};
use crate::nn::tensor::{concat_channels, split_channels};
use crate::nn::{
    count_trainable, rasters_to_tensor, tensor_to_raster, zero_grad, Adam, AdamConfig, BatchNorm2d, Conv2d,
    ConvTranspose2d, Float, Init, Layer, LeakyRelu, Sequential, Tanh, Tensor,
};
use crate::raster::{Raster, IMAGE_SIZE};
use crate::render::{compose_pair, TemplateLibrary};
use crate::seed::rng_for;

/// Generator depths swept by the benchmark.
pub const GENERATOR_DEPTHS: [usize; 5] = [2, 4, 6, 8, 10];
/// Discriminator depths swept by the benchmark.
pub const DISCRIMINATOR_DEPTHS: [usize; 2] = [3, 4];

const CHECKPOINT_KIND: &str = "pix2pix";
const LEAK: f64 = 0.2;
const PIXEL_LO: f64 = -1.0;
const PIXEL_HI: f64 = 1.0;

fn widths(base: usize, k: usize) -> usize {
    base << k.min(3)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    /// Encoder layer count; the decoder has the same number of layers.
    pub n_conv_layers: usize,
    pub base_channels: usize,
    pub input_size: usize,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        Self {
            n_conv_layers: 4,
            base_channels: 64,
            input_size: IMAGE_SIZE,
        }
    }
}

/// Geometry of one encoder layer; decoder layer `k` mirrors encoder layer `k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EncoderLayer {
    pub in_channels: usize,
    pub out_channels: usize,
    pub in_size: usize,
    pub out_size: usize,
    /// Stride-2 4x4 convolution; otherwise a stride-1 3x3 convolution.
    pub downsamples: bool,
    pub batch_norm: bool,
}

impl GeneratorConfig {
    pub fn new(n_conv_layers: usize, base_channels: usize) -> Self {
        Self {
            n_conv_layers,
            base_channels,
            ..Self::default()
        }
    }

    /// Checks the config. Even depths outside [`GENERATOR_DEPTHS`] are
    /// accepted and reported as warnings.
    pub fn validate(&self) -> Result<Vec<String>> {
        let n = self.n_conv_layers;
        if n == 0 || n % 2 != 0 {
            return Err(Error::config(format!(
                "generator n_conv_layers must be one of {GENERATOR_DEPTHS:?}, got {n}"
            )));
        }
        if self.base_channels == 0 {
            return Err(Error::config("generator base_channels must be positive"));
        }
        if self.input_size < 2 || !self.input_size.is_power_of_two() {
            return Err(Error::config(format!(
                "generator input_size must be a power of two >= 2, got {}",
                self.input_size
            )));
        }
        let mut warnings = Vec::new();
        if !GENERATOR_DEPTHS.contains(&n) {
            warnings.push(format!(
                "generator depth {n} is outside the swept set {GENERATOR_DEPTHS:?}"
            ));
        }
        Ok(warnings)
    }

    pub fn encoder_plan(&self) -> Vec<EncoderLayer> {
        let mut size = self.input_size;
        (0..self.n_conv_layers)
            .map(|k| {
                let downsamples = size >= 2;
                let out_size = if downsamples { size / 2 } else { size };
                let layer = EncoderLayer {
                    in_channels: if k == 0 { 3 } else { widths(self.base_channels, k - 1) },
                    out_channels: widths(self.base_channels, k),
                    in_size: size,
                    out_size,
                    downsamples,
                    batch_norm: k > 0 && out_size > 1,
                };
                size = out_size;
                layer
            })
            .collect()
    }

    /// Spatial size at the bottleneck.
    pub fn bottleneck_size(&self) -> usize {
        self.encoder_plan().last().map_or(self.input_size, |l| l.out_size)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DiscriminatorConfig {
    /// Number of stride-2 convolutions before the scoring head.
    pub n_conv_layers: usize,
    pub base_channels: usize,
}

impl Default for DiscriminatorConfig {
    fn default() -> Self {
        Self {
            n_conv_layers: 3,
            base_channels: 64,
        }
    }
}

impl DiscriminatorConfig {
    pub fn new(n_conv_layers: usize, base_channels: usize) -> Self {
        Self {
            n_conv_layers,
            base_channels,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !DISCRIMINATOR_DEPTHS.contains(&self.n_conv_layers) {
            return Err(Error::config(format!(
                "discriminator n_conv_layers must be one of {DISCRIMINATOR_DEPTHS:?}, got {}",
                self.n_conv_layers
            )));
        }
        if self.base_channels == 0 {
            return Err(Error::config("discriminator base_channels must be positive"));
        }
        Ok(())
    }

    /// Side length of the patch-score grid for a square input.
    pub fn patch_grid_size(&self, input_size: usize) -> usize {
        input_size >> self.n_conv_layers
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanHyperparams {
    pub learning_rate: f64,
    /// Weight λ of the L1 reconstruction term.
    pub l1_weight: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub optimizer_betas: (f64, f64),
}

impl Default for GanHyperparams {
    fn default() -> Self {
        Self {
            learning_rate: 2e-4,
            l1_weight: 100.0,
            epochs: 200,
            batch_size: 16,
            optimizer_betas: (0.5, 0.999),
        }
    }
}

impl GanHyperparams {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("GAN epochs must be >= 1"));
        }
        if self.batch_size == 0 {
            return Err(Error::config("GAN batch_size must be >= 1"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("GAN learning_rate must be positive"));
        }
        if !(self.l1_weight >= 0.0 && self.l1_weight.is_finite()) {
            return Err(Error::config("GAN l1_weight must be >= 0"));
        }
        let (b1, b2) = self.optimizer_betas;
        if !((0.0..1.0).contains(&b1) && (0.0..1.0).contains(&b2)) {
            return Err(Error::config("GAN optimizer betas must lie in [0, 1)"));
        }
        Ok(())
    }
}

/// Per-epoch means of each loss term.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GanHistory {
    /// Generator adversarial term (BCE of generated pairs against label 1).
    pub adversarial: Vec<f64>,
    /// Unweighted L1 distance between generated and real images.
    pub l1: Vec<f64>,
    /// Discriminator loss (mean of real and generated BCE).
    pub discriminator: Vec<f64>,
}

impl GanHistory {
    pub fn len(&self) -> usize {
        self.l1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l1.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.adversarial
            .iter()
            .chain(&self.l1)
            .chain(&self.discriminator)
            .all(|v| v.is_finite())
    }
}

/// Encoder-decoder generator with skip connections between mirrored layers.
pub struct Generator<T> {
    config: GeneratorConfig,
    encoder: Vec<Sequential<T>>,
    decoder: Vec<Sequential<T>>,
    encoder_outputs: Vec<usize>,
}

/// Builds a generator with N(0, 0.02) weights drawn from `seed`.
pub fn build_generator<T: Float>(config: &GeneratorConfig, seed: u64) -> Result<Generator<T>> {
    config.validate()?;
    let mut rng = rng_for(seed, &[0x6765_6e]);
    let init = Init::Normal(0.02);
    let plan = config.encoder_plan();
    let n = plan.len();
    let encoder = plan
        .iter()
        .map(|l| {
            let conv = if l.downsamples {
                Conv2d::new(l.in_channels, l.out_channels, 4, 2, 1, !l.batch_norm, init, &mut rng)
            } else {
                Conv2d::new(l.in_channels, l.out_channels, 3, 1, 1, !l.batch_norm, init, &mut rng)
            };
            let mut block = Sequential::new().push("conv", conv);
            if l.batch_norm {
                block = block.push("bn", BatchNorm2d::new(l.out_channels));
            }
            block.push("act", LeakyRelu::new(LEAK))
        })
        .collect();
    let decoder = plan
        .iter()
        .enumerate()
        .map(|(k, l)| {
            let cin = if k == n - 1 { l.out_channels } else { 2 * l.out_channels };
            let cout = l.in_channels;
            let outermost = k == 0;
            let bn = !outermost && l.in_size > 1;
            let mut block = if l.downsamples {
                Sequential::new().push("conv", ConvTranspose2d::new(cin, cout, 4, 2, 1, !bn, init, &mut rng))
            } else {
                Sequential::new().push("conv", Conv2d::new(cin, cout, 3, 1, 1, !bn, init, &mut rng))
            };
            if bn {
                block = block.push("bn", BatchNorm2d::new(cout));
            }
            if outermost {
                block.push("act", Tanh::new())
            } else {
                block.push("act", LeakyRelu::relu())
            }
        })
        .collect();
    Ok(Generator {
        config: *config,
        encoder_outputs: plan.iter().map(|l| l.out_channels).collect(),
        encoder,
        decoder,
    })
}

impl<T: Float> Generator<T> {
    pub fn config(&self) -> &GeneratorConfig {
        &self.config
    }

    pub fn parameter_count(&mut self) -> usize {
        count_trainable(self)
    }
}

impl<T: Float> Layer<T> for Generator<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Tensor<T> {
        let n = self.encoder.len();
        let mut skips = Vec::with_capacity(n);
        let mut h = x.clone();
        for block in &mut self.encoder {
            h = block.forward(&h, train);
            skips.push(h.clone());
        }
        let mut d = self.decoder[n - 1].forward(&skips[n - 1], train);
        for k in (0..n - 1).rev() {
            d = self.decoder[k].forward(&concat_channels(&[&d, &skips[k]]), train);
        }
        d
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        let n = self.encoder.len();
        let mut skip_grads = vec![None; n];
        let mut g = grad.clone();
        for k in 0..n - 1 {
            let gin = self.decoder[k].backward(&g);
            let c = self.encoder_outputs[k];
            let mut parts = split_channels(&gin, &[c, c]).into_iter();
            g = parts.next().expect("decoder part");
            skip_grads[k] = parts.next();
        }
        let mut ge = self.decoder[n - 1].backward(&g);
        for k in (0..n).rev() {
            if let Some(s) = &skip_grads[k] {
                ge.add_assign(s);
            }
            ge = self.encoder[k].backward(&ge);
        }
        ge
    }

    fn visit(&mut self, prefix: &str, f: &mut crate::nn::layers::Visitor<'_, T>) {
        for (k, block) in self.encoder.iter_mut().enumerate() {
            block.visit(&crate::nn::layers::join(prefix, &format!("enc{k}")), f);
        }
        for (k, block) in self.decoder.iter_mut().enumerate() {
            block.visit(&crate::nn::layers::join(prefix, &format!("dec{k}")), f);
        }
    }
}

/// Patch discriminator over channel-concatenated (condition, candidate)
/// pairs. `forward` returns per-patch logits of shape `[n, 1, m, m]`.
pub struct Discriminator<T> {
    config: DiscriminatorConfig,
    body: Sequential<T>,
}

pub fn build_discriminator<T: Float>(config: &DiscriminatorConfig, seed: u64) -> Result<Discriminator<T>> {
    config.validate()?;
    let mut rng = rng_for(seed, &[0x6469_73]);
    let init = Init::Normal(0.02);
    let mut body = Sequential::new();
    let mut cin = 6;
    for k in 0..config.n_conv_layers {
        let cout = widths(config.base_channels, k);
        let bn = k > 0;
        body = body.push(&format!("conv{k}"), Conv2d::new(cin, cout, 4, 2, 1, !bn, init, &mut rng));
        if bn {
            body = body.push(&format!("bn{k}"), BatchNorm2d::new(cout));
        }
        body = body.push(&format!("act{k}"), LeakyRelu::new(LEAK));
        cin = cout;
    }
    body = body.push("head", Conv2d::new(cin, 1, 3, 1, 1, true, init, &mut rng));
    Ok(Discriminator { config: *config, body })
}

impl<T: Float> Discriminator<T> {
    pub fn config(&self) -> &DiscriminatorConfig {
        &self.config
    }

    /// Per-patch probabilities `[n, 1, m, m]` and the per-item decision
    /// (arithmetic mean of the item's patch grid).
    pub fn score(&mut self, condition: &Tensor<T>, candidate: &Tensor<T>) -> (Tensor<T>, Vec<f64>) {
        let logits = self.forward(&concat_channels(&[condition, candidate]), false);
        let grid = logits.map(|z| T::one() / (T::one() + (-z).exp()));
        let decisions = (0..grid.batch())
            .map(|i| {
                let item = grid.item(i);
                item.iter().map(|v| v.as_f64()).sum::<f64>() / item.len() as f64
            })
            .collect();
        (grid, decisions)
    }

    pub fn parameter_count(&mut self) -> usize {
        count_trainable(self)
    }
}

impl<T: Float> Layer<T> for Discriminator<T> {
    fn forward(&mut self, x: &Tensor<T>, train: bool) -> Tensor<T> {
        self.body.forward(x, train)
    }

    fn backward(&mut self, grad: &Tensor<T>) -> Tensor<T> {
        self.body.backward(grad)
    }

    fn visit(&mut self, prefix: &str, f: &mut crate::nn::layers::Visitor<'_, T>) {
        self.body.visit(prefix, f)
    }
}

/// A trained generator/discriminator pair with its loss history.
///
/// Networks sit behind mutexes so a shared model can serve concurrent
/// `generate` calls.
pub struct GanModel {
    pub generator_config: GeneratorConfig,
    pub discriminator_config: DiscriminatorConfig,
    pub hyper: GanHyperparams,
    pub history: GanHistory,
    generator: Mutex<Generator<f32>>,
    discriminator: Mutex<Discriminator<f32>>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointMeta {
    generator: GeneratorConfig,
    discriminator: DiscriminatorConfig,
    hyper: GanHyperparams,
    history: GanHistory,
}

impl GanModel {
    /// Builds an untrained model.
    pub fn new(
        g_cfg: &GeneratorConfig,
        d_cfg: &DiscriminatorConfig,
        hyper: &GanHyperparams,
        seed: u64,
    ) -> Result<Self> {
        hyper.validate()?;
        Ok(Self {
            generator_config: *g_cfg,
            discriminator_config: *d_cfg,
            hyper: *hyper,
            history: GanHistory::default(),
            generator: Mutex::new(build_generator(g_cfg, seed)?),
            discriminator: Mutex::new(build_discriminator(d_cfg, seed)?),
        })
    }

    /// Translates one symbolic image into a realistic one.
    pub fn generate(&self, symbolic: &Raster) -> Result<Raster> {
        Ok(self.generate_batch(&[symbolic])?.remove(0))
    }

    pub fn generate_batch(&self, symbolic: &[&Raster]) -> Result<Vec<Raster>> {
        let x = rasters_to_tensor::<f32>(symbolic, self.generator_config.input_size, PIXEL_LO, PIXEL_HI)?;
        let y = self.generator.lock().expect("generator lock").forward(&x, false);
        Ok((0..y.batch())
            .map(|i| tensor_to_raster(&y, i, PIXEL_LO, PIXEL_HI))
            .collect())
    }

    /// Patch-score grid (row-major, values in `[0,1]`) and its mean.
    pub fn discriminate(&self, condition: &Raster, candidate: &Raster) -> Result<(Vec<f32>, f32)> {
        let size = self.generator_config.input_size;
        let c = rasters_to_tensor::<f32>(&[condition], size, PIXEL_LO, PIXEL_HI)?;
        let x = rasters_to_tensor::<f32>(&[candidate], size, PIXEL_LO, PIXEL_HI)?;
        let (grid, decision) = self.discriminator.lock().expect("discriminator lock").score(&c, &x);
        Ok((grid.into_vec(), decision[0] as f32))
    }

    pub fn generator_parameters(&self) -> usize {
        self.generator.lock().expect("generator lock").parameter_count()
    }

    pub fn discriminator_parameters(&self) -> usize {
        self.discriminator.lock().expect("discriminator lock").parameter_count()
    }

    pub fn to_archive(&self) -> Result<Archive> {
        let meta = serde_json::to_value(CheckpointMeta {
            generator: self.generator_config,
            discriminator: self.discriminator_config,
            hyper: self.hyper,
            history: self.history.clone(),
        })?;
        let mut archive = Archive::new(CHECKPOINT_KIND, meta);
        archive.store_model("generator", &mut *self.generator.lock().expect("generator lock"))?;
        archive.store_model("discriminator", &mut *self.discriminator.lock().expect("discriminator lock"))?;
        Ok(archive)
    }

    pub fn from_archive(archive: &Archive) -> Result<Self> {
        archive.expect_kind(CHECKPOINT_KIND)?;
        let meta: CheckpointMeta = serde_json::from_value(archive.meta.clone())?;
        let mut model = Self::new(&meta.generator, &meta.discriminator, &meta.hyper, 0)?;
        model.history = meta.history;
        archive.restore_model("generator", model.generator.get_mut().expect("generator lock"))?;
        archive.restore_model("discriminator", model.discriminator.get_mut().expect("discriminator lock"))?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        self.to_archive()?.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_archive(&Archive::load(path)?)
    }
}

/// Trains a GAN on (symbolic, real) pairs. Each batch performs one
/// discriminator update followed by one generator update.
pub fn train_gan(
    pairs: &[crate::render::PairedSample],
    g_cfg: &GeneratorConfig,
    d_cfg: &DiscriminatorConfig,
    hyper: &GanHyperparams,
    seed: u64,
) -> Result<GanModel> {
    train_gan_with_progress(pairs, g_cfg, d_cfg, hyper, seed, &mut |_, _| {})
}

/// [`train_gan`] with a callback invoked after every epoch.
pub fn train_gan_with_progress(
    pairs: &[crate::render::PairedSample],
    g_cfg: &GeneratorConfig,
    d_cfg: &DiscriminatorConfig,
    hyper: &GanHyperparams,
    seed: u64,
    on_epoch: &mut dyn FnMut(usize, &GanHistory),
) -> Result<GanModel> {
    if pairs.is_empty() {
        return Err(Error::validation("cannot train a GAN on zero pairs"));
    }
    let mut model = GanModel::new(g_cfg, d_cfg, hyper, seed)?;
    let size = g_cfg.input_size;
    for p in pairs {
        for img in [&p.symbolic, &p.real] {
            if !img.is_square(size) {
                return Err(Error::Dimension {
                    expected: format!("{size}x{size}x3"),
                    actual: format!("{}x{}x3", img.width(), img.height()),
                });
            }
        }
    }
    let generator = model.generator.get_mut().expect("generator lock");
    let discriminator = model.discriminator.get_mut().expect("discriminator lock");
    let adam = AdamConfig::new(hyper.learning_rate, hyper.optimizer_betas.0, hyper.optimizer_betas.1);
    let mut g_opt = Adam::new(adam);
    let mut d_opt = Adam::new(adam);
    let mut order_rng = rng_for(seed, &[0x6f72_64]);
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    let lambda = hyper.l1_weight;
    let mut history = GanHistory::default();
    for epoch in 0..hyper.epochs {
        order.shuffle(&mut order_rng);
        let (mut adv_sum, mut l1_sum, mut d_sum) = (0.0, 0.0, 0.0);
        let batches = order.chunks(hyper.batch_size).count();
        for (b, idx) in order.chunks(hyper.batch_size).enumerate() {
            let sym: Vec<&Raster> = idx.iter().map(|&i| &*pairs[i].symbolic).collect();
            let real: Vec<&Raster> = idx.iter().map(|&i| &*pairs[i].real).collect();
            let x = rasters_to_tensor::<f32>(&sym, size, PIXEL_LO, PIXEL_HI)?;
            let y = rasters_to_tensor::<f32>(&real, size, PIXEL_LO, PIXEL_HI)?;
            let fake = generator.forward(&x, true);
            let non_finite = |what| Error::NonFinite { what, epoch, batch: b };

            // Discriminator: generated pairs -> 0, real pairs -> 1.
            let logits = discriminator.forward(&concat_channels(&[&x, &fake]), true);
            let (loss_fake, mut grad) = bce_with_logits(&logits, 0.0);
            grad.scale(0.5);
            discriminator.backward(&grad);
            let logits = discriminator.forward(&concat_channels(&[&x, &y]), true);
            let (loss_real, mut grad) = bce_with_logits(&logits, 1.0);
            grad.scale(0.5);
            discriminator.backward(&grad);
            let d_loss = 0.5 * (loss_fake + loss_real);
            if !d_loss.is_finite() {
                return Err(non_finite("discriminator loss"));
            }
            d_opt.step(discriminator);

            // Generator: fool the discriminator and match the real image.
            let logits = discriminator.forward(&concat_channels(&[&x, &fake]), true);
            let (adv, grad) = bce_with_logits(&logits, 1.0);
            let d_input = discriminator.backward(&grad);
            zero_grad(discriminator);
            let mut g_grad = split_channels(&d_input, &[3, 3]).pop().expect("candidate part");
            let (l1_loss, mut l1_grad) = l1(&fake, &y);
            if !adv.is_finite() {
                return Err(non_finite("adversarial loss"));
            }
            if !l1_loss.is_finite() {
                return Err(non_finite("L1 loss"));
            }
            l1_grad.scale(f32::of(lambda));
            g_grad.add_assign(&l1_grad);
            generator.backward(&g_grad);
            g_opt.step(generator);

            adv_sum += adv;
            l1_sum += l1_loss;
            d_sum += d_loss;
        }
        let nb = batches as f64;
        history.adversarial.push(adv_sum / nb);
        history.l1.push(l1_sum / nb);
        history.discriminator.push(d_sum / nb);
        on_epoch(epoch, &history);
    }
    model.history = history;
    Ok(model)
}

/// Appends one generated sample per input sample: the sample's class
/// template is rendered, translated by the generator, and labelled like
/// the original. Output holds the originals followed by the generated
/// copies in the same order.
pub fn gan_augment_dataset(model: &GanModel, dataset: &Dataset, templates: &TemplateLibrary) -> Result<Dataset> {
    if dataset.is_empty() {
        return Err(Error::validation("cannot augment an empty dataset"));
    }
    let mut classes: Vec<usize> = dataset.samples().iter().map(|s| s.class_index).collect();
    classes.sort_unstable();
    classes.dedup();
    for &c in &classes {
        if templates.get(c).is_err() {
            return Err(Error::MissingTemplate(c));
        }
    }
    // The generator is deterministic and the condition depends only on the
    // class and image size, so one translation per (class, size) suffices.
    let mut generated: BTreeMap<(usize, usize, usize), Arc<Raster>> = BTreeMap::new();
    let mut out: Vec<ImageSample> = Vec::with_capacity(2 * dataset.len());
    out.extend_from_slice(dataset.samples());
    for s in dataset.samples() {
        let key = (s.class_index, s.pixels.width(), s.pixels.height());
        let pixels = match generated.get(&key) {
            Some(p) => Arc::clone(p),
            None => {
                let pair = compose_pair(s, templates.get(s.class_index)?)?;
                let p = Arc::new(model.generate(&pair.symbolic)?);
                generated.insert(key, Arc::clone(&p));
                p
            }
        };
        out.push(ImageSample { pixels, ..s.clone() });
    }
    dataset.with_samples(out)
}
