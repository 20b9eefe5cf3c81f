//! The seven classical augmentation baselines.
//!
//! Each technique has a parameter point at which it is the identity map:
//! blur σ = 0, brightness δ = 0, contrast c = 1, displacement (0, 0), a
//! zero-area occlusion, rotation θ = 0 and scaling s = 1.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{Dataset, ImageSample};
use crate::error::{Error, Result};
use crate::raster::{sample_clamped, Raster};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Technique {
    Blur,
    Brightness,
    Contrast,
    Displacement,
    Occlusion,
    Rotation,
    Scaling,
}

impl Technique {
    pub const ALL: [Technique; 7] = [
        Technique::Blur,
        Technique::Brightness,
        Technique::Contrast,
        Technique::Displacement,
        Technique::Occlusion,
        Technique::Rotation,
        Technique::Scaling,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Technique::Blur => "blur",
            Technique::Brightness => "brightness",
            Technique::Contrast => "contrast",
            Technique::Displacement => "displacement",
            Technique::Occlusion => "occlusion",
            Technique::Rotation => "rotation",
            Technique::Scaling => "scaling",
        }
    }

    /// Parameter names in sampling order.
    pub fn param_names(self) -> &'static [&'static str] {
        match self {
            Technique::Blur => &["sigma"],
            Technique::Brightness => &["delta"],
            Technique::Contrast => &["factor"],
            Technique::Displacement => &["dx", "dy"],
            Technique::Occlusion => &["x", "y", "width", "height", "fill"],
            Technique::Rotation => &["degrees"],
            Technique::Scaling => &["factor"],
        }
    }

    /// Default sampling ranges, calibrated so that signs stay recognizable.
    pub fn default_ranges(self) -> Vec<ParamRange> {
        let r = ParamRange::new;
        match self {
            Technique::Blur => vec![r(0.5, 2.0)],
            Technique::Brightness => vec![r(-0.25, 0.25)],
            Technique::Contrast => vec![r(0.6, 1.4)],
            Technique::Displacement => vec![r(-6.0, 6.0), r(-6.0, 6.0)],
            // 32x32 is a quarter of a 64x64 image
            Technique::Occlusion => vec![r(0.0, 56.0), r(0.0, 56.0), r(8.0, 32.0), r(8.0, 32.0), r(0.5, 0.5)],
            Technique::Rotation => vec![r(-15.0, 15.0)],
            Technique::Scaling => vec![r(0.8, 1.2)],
        }
    }
}

impl fmt::Display for Technique {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Technique {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Technique::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| Error::config(format!("unknown augmentation technique {s:?}")))
    }
}

/// Concrete parameters for one application of a technique.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "technique", rename_all = "lowercase")]
pub enum AugmentParams {
    Blur { sigma: f32 },
    Brightness { delta: f32 },
    Contrast { factor: f32 },
    Displacement { dx: f32, dy: f32 },
    /// Fills pixels whose centers fall in `[x, x+width) × [y, y+height)`.
    Occlusion { x: f32, y: f32, width: f32, height: f32, fill: f32 },
    Rotation { degrees: f32 },
    Scaling { factor: f32 },
}

impl AugmentParams {
    pub fn technique(&self) -> Technique {
        match self {
            AugmentParams::Blur { .. } => Technique::Blur,
            AugmentParams::Brightness { .. } => Technique::Brightness,
            AugmentParams::Contrast { .. } => Technique::Contrast,
            AugmentParams::Displacement { .. } => Technique::Displacement,
            AugmentParams::Occlusion { .. } => Technique::Occlusion,
            AugmentParams::Rotation { .. } => Technique::Rotation,
            AugmentParams::Scaling { .. } => Technique::Scaling,
        }
    }

    /// Builds parameters from values listed in [`Technique::param_names`] order.
    pub fn from_values(technique: Technique, v: &[f32]) -> Result<Self> {
        let expected = technique.param_names().len();
        if v.len() != expected {
            return Err(Error::InvalidParams {
                technique: technique.name(),
                message: format!("expected {expected} values, got {}", v.len()),
            });
        }
        Ok(match technique {
            Technique::Blur => AugmentParams::Blur { sigma: v[0] },
            Technique::Brightness => AugmentParams::Brightness { delta: v[0] },
            Technique::Contrast => AugmentParams::Contrast { factor: v[0] },
            Technique::Displacement => AugmentParams::Displacement { dx: v[0], dy: v[1] },
            Technique::Occlusion => AugmentParams::Occlusion {
                x: v[0],
                y: v[1],
                width: v[2],
                height: v[3],
                fill: v[4],
            },
            Technique::Rotation => AugmentParams::Rotation { degrees: v[0] },
            Technique::Scaling => AugmentParams::Scaling { factor: v[0] },
        })
    }

    pub fn values(&self) -> Vec<f32> {
        match *self {
            AugmentParams::Blur { sigma } => vec![sigma],
            AugmentParams::Brightness { delta } => vec![delta],
            AugmentParams::Contrast { factor } | AugmentParams::Scaling { factor } => vec![factor],
            AugmentParams::Displacement { dx, dy } => vec![dx, dy],
            AugmentParams::Occlusion {
                x,
                y,
                width,
                height,
                fill,
            } => vec![x, y, width, height, fill],
            AugmentParams::Rotation { degrees } => vec![degrees],
        }
    }

    fn validate(&self) -> Result<()> {
        let technique = self.technique();
        let bad = |message: String| Error::InvalidParams {
            technique: technique.name(),
            message,
        };
        if let Some(v) = self.values().iter().find(|v| !v.is_finite()) {
            return Err(bad(format!("non-finite value {v}")));
        }
        match *self {
            AugmentParams::Blur { sigma } if !(0.0..=16.0).contains(&sigma) => {
                Err(bad(format!("sigma {sigma} outside [0, 16]")))
            }
            AugmentParams::Brightness { delta } if !(-1.0..=1.0).contains(&delta) => {
                Err(bad(format!("delta {delta} outside [-1, 1]")))
            }
            AugmentParams::Contrast { factor } if !(0.0..=16.0).contains(&factor) => {
                Err(bad(format!("factor {factor} outside [0, 16]")))
            }
            AugmentParams::Displacement { dx, dy } if dx.abs() > 64.0 || dy.abs() > 64.0 => {
                Err(bad(format!("offset ({dx}, {dy}) exceeds 64 pixels")))
            }
            AugmentParams::Occlusion {
                width,
                height,
                fill,
                ..
            } if width < 0.0 || height < 0.0 || !(0.0..=1.0).contains(&fill) => Err(bad(format!(
                "rectangle {width}x{height} with fill {fill} is not drawable"
            ))),
            AugmentParams::Rotation { degrees } if degrees.abs() > 360.0 => {
                Err(bad(format!("angle {degrees} exceeds one turn")))
            }
            AugmentParams::Scaling { factor } if !(factor > 0.0 && factor <= 16.0) => {
                Err(bad(format!("factor {factor} outside (0, 16]")))
            }
            _ => Ok(()),
        }
    }
}

/// Applies one augmentation. The output has the input's size and values
/// in `[0, 1]`; displacement, rotation and scaling replicate the border.
pub fn apply_op(image: &Raster, params: &AugmentParams) -> Result<Raster> {
    params.validate()?;
    let mut out = match *params {
        AugmentParams::Blur { sigma } => gaussian_blur(image, sigma),
        AugmentParams::Brightness { delta } => map_values(image, |v| v + delta),
        AugmentParams::Contrast { factor } => map_values(image, |v| 0.5 + (v - 0.5) * factor),
        AugmentParams::Displacement { dx, dy } => {
            warp(image, |x, y| (x - dx, y - dy))
        }
        AugmentParams::Occlusion {
            x,
            y,
            width,
            height,
            fill,
        } => {
            let mut out = image.clone();
            for py in 0..image.height() {
                let cy = py as f32 + 0.5;
                if cy < y || cy >= y + height {
                    continue;
                }
                for px in 0..image.width() {
                    let cx = px as f32 + 0.5;
                    if cx >= x && cx < x + width {
                        out.set_pixel(px, py, [fill; 3]);
                    }
                }
            }
            out
        }
        AugmentParams::Rotation { degrees } => {
            let (s, c) = degrees.to_radians().sin_cos();
            let (cx, cy) = center(image);
            // inverse rotation of each output coordinate
            warp(image, |x, y| {
                let (u, v) = (x - cx, y - cy);
                (cx + c * u + s * v, cy - s * u + c * v)
            })
        }
        AugmentParams::Scaling { factor } => {
            let (cx, cy) = center(image);
            warp(image, |x, y| (cx + (x - cx) / factor, cy + (y - cy) / factor))
        }
    };
    out.clamp_unit();
    Ok(out)
}

fn center(image: &Raster) -> (f32, f32) {
    (
        (image.width() as f32 - 1.0) * 0.5,
        (image.height() as f32 - 1.0) * 0.5,
    )
}

fn map_values(image: &Raster, f: impl Fn(f32) -> f32) -> Raster {
    let data = image.data().iter().map(|&v| f(v)).collect();
    Raster::from_vec(image.width(), image.height(), data).expect("same shape")
}

/// Resamples through an output→input coordinate map.
fn warp(image: &Raster, inverse: impl Fn(f32, f32) -> (f32, f32)) -> Raster {
    Raster::from_fn(image.width(), image.height(), |x, y| {
        let (sx, sy) = inverse(x as f32, y as f32);
        [0, 1, 2].map(|c| sample_clamped(image, sx, sy, c))
    })
}

/// Normalized 1-D Gaussian taps with radius `ceil(3σ)`; σ = 0 gives a delta.
pub fn gaussian_kernel(sigma: f32) -> Vec<f32> {
    if sigma <= 0.0 {
        return vec![1.0];
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let taps: Vec<f64> = (-radius..=radius)
        .map(|i| (-(i * i) as f64 / (2.0 * (sigma as f64).powi(2))).exp())
        .collect();
    let sum: f64 = taps.iter().sum();
    taps.iter().map(|t| (t / sum) as f32).collect()
}

fn gaussian_blur(image: &Raster, sigma: f32) -> Raster {
    let kernel = gaussian_kernel(sigma);
    if kernel.len() == 1 {
        return image.clone();
    }
    let r = (kernel.len() / 2) as i64;
    let (w, h) = (image.width() as i64, image.height() as i64);
    let horizontal = Raster::from_fn(image.width(), image.height(), |x, y| {
        let mut acc = [0.0f32; 3];
        for (k, &wt) in kernel.iter().enumerate() {
            let sx = (x as i64 + k as i64 - r).clamp(0, w - 1) as usize;
            for (c, a) in acc.iter_mut().enumerate() {
                *a += wt * image.get(sx, y, c);
            }
        }
        acc
    });
    Raster::from_fn(image.width(), image.height(), |x, y| {
        let mut acc = [0.0f32; 3];
        for (k, &wt) in kernel.iter().enumerate() {
            let sy = (y as i64 + k as i64 - r).clamp(0, h - 1) as usize;
            for (c, a) in acc.iter_mut().enumerate() {
                *a += wt * horizontal.get(x, sy, c);
            }
        }
        acc
    })
}

/// Closed interval for one sampled parameter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamRange {
    pub lo: f32,
    pub hi: f32,
}

impl ParamRange {
    pub fn new(lo: f32, hi: f32) -> Self {
        Self { lo, hi }
    }
}

/// A technique, its sampling ranges and the seed of its random stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AugmentationSpec {
    pub technique: Technique,
    /// Keyed by parameter name; see [`Technique::param_names`].
    pub ranges: BTreeMap<String, ParamRange>,
    pub seed: u64,
}

impl AugmentationSpec {
    pub fn with_defaults(technique: Technique, seed: u64) -> Self {
        let ranges = technique
            .param_names()
            .iter()
            .zip(technique.default_ranges())
            .map(|(n, r)| (n.to_string(), r))
            .collect();
        Self {
            technique,
            ranges,
            seed,
        }
    }

    /// Ranges in sampling order, checked for completeness and ordering.
    pub fn ordered_ranges(&self) -> Result<Vec<ParamRange>> {
        let names = self.technique.param_names();
        let bad = |message: String| Error::InvalidParams {
            technique: self.technique.name(),
            message,
        };
        if let Some(extra) = self.ranges.keys().find(|k| !names.contains(&k.as_str())) {
            return Err(bad(format!("unknown parameter {extra:?}")));
        }
        names
            .iter()
            .map(|n| {
                let r = self
                    .ranges
                    .get(*n)
                    .ok_or_else(|| bad(format!("missing range for {n:?}")))?;
                if !(r.lo.is_finite() && r.hi.is_finite()) || r.lo > r.hi {
                    return Err(bad(format!("invalid range [{}, {}] for {n:?}", r.lo, r.hi)));
                }
                Ok(*r)
            })
            .collect()
    }
}

/// Draws parameters uniformly from the spec's ranges. Draw `i` always
/// comes from ChaCha8 stream `i` of the spec's seed.
pub fn sample_params(spec: &AugmentationSpec, draw_index: u64) -> Result<AugmentParams> {
    let ranges = spec.ordered_ranges()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(draw_index);
    let values: Vec<f32> = ranges
        .iter()
        .map(|r| {
            let u: f64 = rng.random();
            (r.lo as f64 + u * (r.hi as f64 - r.lo as f64)) as f32
        })
        .collect();
    AugmentParams::from_values(spec.technique, &values)
}

/// Size of a dataset after one augmented copy per sample.
pub fn doubled_size(n: usize) -> usize {
    2 * n
}

/// Returns the original samples followed by one augmented copy of each.
/// Copy `i` uses draw `i` of the spec, so the result does not depend on
/// processing order.
pub fn augment_dataset(dataset: &Dataset, spec: &AugmentationSpec) -> Result<Dataset> {
    if dataset.is_empty() {
        return Err(Error::validation("cannot augment an empty dataset"));
    }
    spec.ordered_ranges()?;
    let mut samples = Vec::with_capacity(doubled_size(dataset.len()));
    samples.extend_from_slice(dataset.samples());
    for (i, s) in dataset.samples().iter().enumerate() {
        let params = sample_params(spec, i as u64)?;
        samples.push(ImageSample {
            pixels: Arc::new(apply_op(&s.pixels, &params)?),
            ..s.clone()
        });
    }
    debug_assert_eq!(samples.len(), doubled_size(dataset.len()));
    dataset.with_samples(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{ShapeFamily, Split};

    fn random_image(seed: u64) -> Raster {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Raster::from_fn(64, 64, |_, _| [rng.random(), rng.random(), rng.random()])
    }

    /// Direct 2-D convolution with a separately built 2-D Gaussian and
    /// clamped borders, accumulated in f64.
    fn blur_oracle(img: &Raster, sigma: f64) -> Vec<f64> {
        let r = (3.0 * sigma).ceil() as i64;
        let mut k2 = Vec::new();
        for j in -r..=r {
            for i in -r..=r {
                k2.push((-((i * i + j * j) as f64) / (2.0 * sigma * sigma)).exp());
            }
        }
        let total: f64 = k2.iter().sum();
        let (w, h) = (img.width() as i64, img.height() as i64);
        let mut out = Vec::new();
        for y in 0..h {
            for x in 0..w {
                for c in 0..3 {
                    let mut acc = 0.0;
                    for j in -r..=r {
                        for i in -r..=r {
                            let sx = (x + i).clamp(0, w - 1) as usize;
                            let sy = (y + j).clamp(0, h - 1) as usize;
                            let wt = k2[((j + r) * (2 * r + 1) + (i + r)) as usize] / total;
                            acc += wt * img.get(sx, sy, c) as f64;
                        }
                    }
                    out.push(acc);
                }
            }
        }
        out
    }

    #[test]
    fn blur_matches_direct_convolution() {
        let img = random_image(3);
        let out = apply_op(&img, &AugmentParams::Blur { sigma: 1.0 }).unwrap();
        for (a, b) in out.data().iter().zip(blur_oracle(&img, 1.0)) {
            assert!((*a as f64 - b).abs() <= 1e-5, "{a} vs {b}");
        }
    }

    #[test]
    fn identity_points() {
        let img = random_image(9);
        let exact = [
            AugmentParams::Brightness { delta: 0.0 },
            AugmentParams::Contrast { factor: 1.0 },
            AugmentParams::Displacement { dx: 0.0, dy: 0.0 },
            AugmentParams::Occlusion {
                x: 10.0,
                y: 10.0,
                width: 0.0,
                height: 0.0,
                fill: 0.0,
            },
            AugmentParams::Rotation { degrees: 0.0 },
            AugmentParams::Scaling { factor: 1.0 },
        ];
        for p in exact {
            assert_eq!(apply_op(&img, &p).unwrap(), img, "{p:?}");
        }
        for sigma in [0.0, 1e-3] {
            let out = apply_op(&img, &AugmentParams::Blur { sigma }).unwrap();
            for (a, b) in out.data().iter().zip(img.data()) {
                assert!((a - b).abs() <= 1e-6);
            }
        }
    }

    #[test]
    fn brightness_on_constant_image() {
        let img = Raster::filled(64, 64, [0.5; 3]);
        let out = apply_op(&img, &AugmentParams::Brightness { delta: 0.2 }).unwrap();
        assert!(out.data().iter().all(|&v| (v - 0.7).abs() < 1e-7));
        let out = apply_op(&img, &AugmentParams::Brightness { delta: 0.8 }).unwrap();
        assert!(out.data().iter().all(|&v| v == 1.0));
    }

    #[test]
    fn contrast_scales_about_mid_gray() {
        let img = Raster::filled(4, 4, [0.75, 0.25, 0.5]);
        let out = apply_op(&img, &AugmentParams::Contrast { factor: 2.0 }).unwrap();
        assert_eq!(out.pixel(1, 1), [1.0, 0.0, 0.5]);
    }

    #[test]
    fn displacement_translates() {
        let img = random_image(5);
        let out = apply_op(&img, &AugmentParams::Displacement { dx: 3.0, dy: 0.0 }).unwrap();
        for y in 0..64 {
            for x in 3..64 {
                assert_eq!(out.pixel(x, y), img.pixel(x - 3, y));
            }
            // replicated border
            for x in 0..3 {
                assert_eq!(out.pixel(x, y), img.pixel(0, y));
            }
        }
    }

    #[test]
    fn occlusion_fills_rectangle_only() {
        let img = random_image(6);
        let p = AugmentParams::Occlusion {
            x: 10.0,
            y: 10.0,
            width: 8.0,
            height: 8.0,
            fill: 0.0,
        };
        let out = apply_op(&img, &p).unwrap();
        let mut filled = 0;
        for y in 0..64 {
            for x in 0..64 {
                if (10..18).contains(&x) && (10..18).contains(&y) {
                    assert_eq!(out.pixel(x, y), [0.0; 3]);
                    filled += 1;
                } else {
                    assert_eq!(out.pixel(x, y), img.pixel(x, y));
                }
            }
        }
        assert_eq!(filled, 64);
    }

    #[test]
    fn rotation_by_quarter_turn_permutes_pixels() {
        let img = random_image(8);
        let out = apply_op(&img, &AugmentParams::Rotation { degrees: 90.0 }).unwrap();
        // out(x, y) = in(cx + (y - cy), cy - (x - cx)) = in(y, 63 - x)
        for y in 0..64 {
            for x in 0..64 {
                for c in 0..3 {
                    assert!((out.get(x, y, c) - img.get(y, 63 - x, c)).abs() < 1e-4);
                }
            }
        }
    }

    #[test]
    fn scaling_up_magnifies_center() {
        let img = Raster::from_fn(64, 64, |x, _| [x as f32 / 63.0; 3]);
        let out = apply_op(&img, &AugmentParams::Scaling { factor: 2.0 }).unwrap();
        // horizontal ramp slope halves
        let slope = out.get(40, 5, 0) - out.get(39, 5, 0);
        assert!((slope - 0.5 / 63.0).abs() < 1e-5);
        assert!(out.is_square(64));
    }

    #[test]
    fn illegal_params_rejected() {
        let img = random_image(1);
        for p in [
            AugmentParams::Blur { sigma: -1.0 },
            AugmentParams::Brightness { delta: f32::NAN },
            AugmentParams::Scaling { factor: 0.0 },
            AugmentParams::Occlusion {
                x: 0.0,
                y: 0.0,
                width: -1.0,
                height: 2.0,
                fill: 0.5,
            },
        ] {
            assert!(apply_op(&img, &p).is_err(), "{p:?}");
        }
        assert!(AugmentParams::from_values(Technique::Displacement, &[1.0]).is_err());
    }

    #[test]
    fn degenerate_range_always_returns_endpoint() {
        let mut spec = AugmentationSpec::with_defaults(Technique::Brightness, 4);
        spec.ranges.insert("delta".into(), ParamRange::new(0.125, 0.125));
        for i in 0..50 {
            assert_eq!(sample_params(&spec, i).unwrap(), AugmentParams::Brightness { delta: 0.125 });
        }
    }

    #[test]
    fn sampling_is_deterministic_and_in_range() {
        for t in Technique::ALL {
            let spec = AugmentationSpec::with_defaults(t, 99);
            let ranges = spec.ordered_ranges().unwrap();
            for i in 0..200 {
                let p = sample_params(&spec, i).unwrap();
                assert_eq!(p, sample_params(&spec, i).unwrap());
                for (v, r) in p.values().iter().zip(&ranges) {
                    assert!(*v >= r.lo && *v <= r.hi, "{t}: {v} not in {r:?}");
                }
            }
        }
    }

    #[test]
    fn inverted_range_rejected() {
        let mut spec = AugmentationSpec::with_defaults(Technique::Rotation, 0);
        spec.ranges.insert("degrees".into(), ParamRange::new(5.0, -5.0));
        assert!(sample_params(&spec, 0).is_err());
        spec.ranges.insert("bogus".into(), ParamRange::new(0.0, 1.0));
        assert!(spec.ordered_ranges().is_err());
    }

    #[test]
    fn rotation_draws_pass_chi_square() {
        let spec = AugmentationSpec::with_defaults(Technique::Rotation, 2024);
        let mut bins = [0usize; 10];
        let n = 10_000;
        for i in 0..n {
            let AugmentParams::Rotation { degrees } = sample_params(&spec, i).unwrap() else {
                unreachable!()
            };
            let b = (((degrees + 15.0) / 30.0) * 10.0).floor() as usize;
            bins[b.min(9)] += 1;
        }
        let expected = n as f64 / 10.0;
        let chi2: f64 = bins
            .iter()
            .map(|&o| (o as f64 - expected).powi(2) / expected)
            .sum();
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let p = 1.0 - ChiSquared::new(9.0).unwrap().cdf(chi2);
        assert!(p > 0.01, "chi2 {chi2}, p {p}");
    }

    #[test]
    fn augment_doubles_and_keeps_labels() {
        let samples = vec![ImageSample::new(random_image(0), 2, Split::Train)];
        let ds = Dataset::new(samples, 3, ShapeFamily::Synthetic).unwrap();
        let spec = AugmentationSpec::with_defaults(Technique::Occlusion, 1);
        let out = augment_dataset(&ds, &spec).unwrap();
        assert_eq!(out.labels(), vec![2, 2]);
        assert_eq!(out.samples()[0], ds.samples()[0]);
        assert_ne!(out.samples()[1].pixels, ds.samples()[0].pixels);
        let empty = ds.empty_like();
        assert!(augment_dataset(&empty, &spec).is_err());
    }

    #[test]
    fn doubling_rule_matches_reported_counts() {
        assert_eq!(doubled_size(61089), 122178);
        assert_eq!(doubled_size(90218), 180436);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn technique() -> impl Strategy<Value = Technique> {
            prop::sample::select(Technique::ALL.to_vec())
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(48))]

            #[test]
            fn outputs_stay_in_unit_range(t in technique(), seed in any::<u64>(), draw in 0u64..1000) {
                let img = random_image(seed);
                let p = sample_params(&AugmentationSpec::with_defaults(t, seed), draw).unwrap();
                let out = apply_op(&img, &p).unwrap();
                prop_assert!(out.in_unit_range());
                prop_assert!(out.is_square(64));
            }

            #[test]
            fn augmentation_reproducible(t in technique(), seed in any::<u64>(), n in 1usize..6, k in 2usize..5) {
                let samples = (0..n)
                    .map(|i| ImageSample::new(random_image(seed ^ i as u64), i % k, Split::Train))
                    .collect();
                let ds = Dataset::new(samples, k, ShapeFamily::Synthetic).unwrap();
                let spec = AugmentationSpec::with_defaults(t, seed);
                let a = augment_dataset(&ds, &spec).unwrap();
                let b = augment_dataset(&ds, &spec).unwrap();
                prop_assert_eq!(&a, &b);
                prop_assert_eq!(a.len(), 2 * n);
                let mut labels = ds.labels();
                labels.extend(ds.labels());
                prop_assert_eq!(a.labels(), labels);
            }
        }
    }
}
