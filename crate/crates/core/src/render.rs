//! Symbolic sign rendering, (symbolic, real) pair construction and a
//! procedural stand-in for photographed signs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::{BBox, Dataset, ImageSample, ShapeFamily, Split};
use crate::error::{Error, Result};
use crate::raster::{sample_clamped, Raster, IMAGE_SIZE};
use crate::seed::rng_for;

pub type Rgb = [f32; 3];
pub type Point = [f32; 2];

/// Color outside the sign silhouette.
pub const BACKGROUND: Rgb = [0.5, 0.5, 0.5];

/// Linear supersampling factor used by [`render_symbolic`].
pub const SUPERSAMPLE: usize = 4;

pub const CIRCLE_RADIUS: f32 = 0.47;
const TRIANGLE: [Point; 3] = [[0.5, 0.05], [0.97, 0.9], [0.03, 0.9]];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SignShape {
    Circle,
    Triangle,
}

/// One vector drawing primitive in normalized `[0,1]²` coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Primitive {
    Line {
        from: Point,
        to: Point,
        width: f32,
        color: Rgb,
    },
    Polyline {
        points: Vec<Point>,
        width: f32,
        color: Rgb,
    },
    /// Ring segment; angles in degrees, counter-clockwise from +x as seen on screen.
    Arc {
        center: Point,
        radius: f32,
        start_deg: f32,
        end_deg: f32,
        width: f32,
        color: Rgb,
    },
    Disc {
        center: Point,
        radius: f32,
        color: Rgb,
    },
    /// Seven-segment digit glyph centered at `center`.
    Digit {
        digit: u8,
        center: Point,
        height: f32,
        stroke: f32,
        color: Rgb,
    },
    Arrow {
        from: Point,
        to: Point,
        width: f32,
        head: f32,
        color: Rgb,
    },
}

impl Primitive {
    fn color(&self) -> Rgb {
        match self {
            Primitive::Line { color, .. }
            | Primitive::Polyline { color, .. }
            | Primitive::Arc { color, .. }
            | Primitive::Disc { color, .. }
            | Primitive::Digit { color, .. }
            | Primitive::Arrow { color, .. } => *color,
        }
    }

    fn points(&self) -> Vec<Point> {
        match self {
            Primitive::Line { from, to, .. } | Primitive::Arrow { from, to, .. } => vec![*from, *to],
            Primitive::Polyline { points, .. } => points.clone(),
            Primitive::Arc { center, .. }
            | Primitive::Disc { center, .. }
            | Primitive::Digit { center, .. } => vec![*center],
        }
    }

    fn validate(&self) -> Result<()> {
        let in_unit = |p: &Point| p.iter().all(|v| (0.0..=1.0).contains(v));
        if let Some(p) = self.points().iter().find(|p| !in_unit(p)) {
            return Err(Error::validation(format!(
                "primitive coordinate {p:?} outside the unit square"
            )));
        }
        if !self.color().iter().all(|v| (0.0..=1.0).contains(v)) {
            return Err(Error::validation("primitive color outside [0, 1]"));
        }
        if let Primitive::Digit { digit, .. } = self {
            if *digit > 9 {
                return Err(Error::validation(format!("digit glyph {digit} is not 0-9")));
            }
        }
        Ok(())
    }

    fn contains(&self, p: Point) -> bool {
        match self {
            Primitive::Line { from, to, width, .. } => seg_dist(p, *from, *to) <= width * 0.5,
            Primitive::Polyline { points, width, .. } => points
                .windows(2)
                .any(|w| seg_dist(p, w[0], w[1]) <= width * 0.5),
            Primitive::Arc {
                center,
                radius,
                start_deg,
                end_deg,
                width,
                ..
            } => {
                let (dx, dy) = (p[0] - center[0], p[1] - center[1]);
                if ((dx * dx + dy * dy).sqrt() - radius).abs() > width * 0.5 {
                    return false;
                }
                let angle = (-dy).atan2(dx).to_degrees();
                let span = end_deg - start_deg;
                span >= 360.0 || (angle - start_deg).rem_euclid(360.0) <= span
            }
            Primitive::Disc { center, radius, .. } => dist(p, *center) <= *radius,
            Primitive::Digit {
                digit,
                center,
                height,
                stroke,
                ..
            } => digit_segments(*digit, *center, *height)
                .iter()
                .any(|(a, b)| seg_dist(p, *a, *b) <= stroke * 0.5),
            Primitive::Arrow {
                from,
                to,
                width,
                head,
                ..
            } => {
                let len = dist(*from, *to).max(1e-6);
                let dir = [(to[0] - from[0]) / len, (to[1] - from[1]) / len];
                let base = [to[0] - dir[0] * head, to[1] - dir[1] * head];
                if seg_dist(p, *from, base) <= width * 0.5 {
                    return true;
                }
                let normal = [-dir[1] * head * 0.7, dir[0] * head * 0.7];
                let tri = [
                    *to,
                    [base[0] + normal[0], base[1] + normal[1]],
                    [base[0] - normal[0], base[1] - normal[1]],
                ];
                in_triangle(p, &tri)
            }
        }
    }
}

fn dist(a: Point, b: Point) -> f32 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn seg_dist(p: Point, a: Point, b: Point) -> f32 {
    let (vx, vy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = vx * vx + vy * vy;
    let t = if len2 <= 0.0 {
        0.0
    } else {
        (((p[0] - a[0]) * vx + (p[1] - a[1]) * vy) / len2).clamp(0.0, 1.0)
    };
    dist(p, [a[0] + t * vx, a[1] + t * vy])
}

/// Signed distance of `p` from each edge of a triangle; positive inside
/// regardless of winding.
fn edge_distances(p: Point, tri: &[Point; 3]) -> [f32; 3] {
    let area = (tri[1][0] - tri[0][0]) * (tri[2][1] - tri[0][1])
        - (tri[2][0] - tri[0][0]) * (tri[1][1] - tri[0][1]);
    let sign = area.signum();
    let mut out = [0.0; 3];
    for i in 0..3 {
        let a = tri[i];
        let b = tri[(i + 1) % 3];
        let len = dist(a, b).max(1e-9);
        let cross = (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]);
        out[i] = sign * cross / len;
    }
    out
}

fn in_triangle(p: Point, tri: &[Point; 3]) -> bool {
    edge_distances(p, tri).iter().all(|&d| d >= 0.0)
}

fn digit_segments(digit: u8, c: Point, h: f32) -> Vec<(Point, Point)> {
    let w = h * 0.55;
    let (x0, x1) = (c[0] - w / 2.0, c[0] + w / 2.0);
    let (y0, ym, y1) = (c[1] - h / 2.0, c[1], c[1] + h / 2.0);
    let seg = [
        ([x0, y0], [x1, y0]), // a: top
        ([x1, y0], [x1, ym]), // b: upper right
        ([x1, ym], [x1, y1]), // c: lower right
        ([x0, y1], [x1, y1]), // d: bottom
        ([x0, ym], [x0, y1]), // e: lower left
        ([x0, y0], [x0, ym]), // f: upper left
        ([x0, ym], [x1, ym]), // g: middle
    ];
    let on: &[usize] = match digit {
        0 => &[0, 1, 2, 3, 4, 5],
        1 => &[1, 2],
        2 => &[0, 1, 6, 4, 3],
        3 => &[0, 1, 6, 2, 3],
        4 => &[5, 6, 1, 2],
        5 => &[0, 5, 6, 2, 3],
        6 => &[0, 5, 6, 4, 2, 3],
        7 => &[0, 1, 2],
        8 => &[0, 1, 2, 3, 4, 5, 6],
        _ => &[0, 1, 2, 3, 5, 6],
    };
    on.iter().map(|&i| seg[i]).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SignTemplate {
    pub shape: SignShape,
    pub class_index: usize,
    pub name: String,
    pub border_color: Rgb,
    pub face_color: Rgb,
    /// Border thickness in normalized units.
    pub border_width: f32,
    pub pictogram: Vec<Primitive>,
}

impl SignTemplate {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..0.3).contains(&self.border_width) {
            return Err(Error::validation(format!(
                "border width {} outside [0, 0.3)",
                self.border_width
            )));
        }
        for p in &self.pictogram {
            p.validate()?;
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let t: SignTemplate = serde_json::from_str(text)
            .map_err(|e| Error::validation(format!("bad sign template: {e}")))?;
        t.validate()?;
        Ok(t)
    }

    /// Silhouette membership: 0 outside, 1 on the border, 2 on the face.
    fn zone(&self, p: Point) -> u8 {
        match self.shape {
            SignShape::Circle => {
                let r = dist(p, [0.5, 0.5]);
                if r > CIRCLE_RADIUS {
                    0
                } else if r > CIRCLE_RADIUS - self.border_width {
                    1
                } else {
                    2
                }
            }
            SignShape::Triangle => {
                let d = edge_distances(p, &TRIANGLE);
                let m = d[0].min(d[1]).min(d[2]);
                if m < 0.0 {
                    0
                } else if m < self.border_width {
                    1
                } else {
                    2
                }
            }
        }
    }

    fn color_at(&self, p: Point) -> Option<Rgb> {
        let mut color = match self.zone(p) {
            0 => return None,
            1 => self.border_color,
            _ => self.face_color,
        };
        for prim in &self.pictogram {
            if prim.contains(p) {
                color = prim.color();
            }
        }
        Some(color)
    }
}

/// Renders `template` as a `size`×`size` raster with 4× supersampled
/// anti-aliasing. Pixels outside the silhouette are [`BACKGROUND`].
pub fn render_symbolic(template: &SignTemplate, size: usize) -> Result<Raster> {
    Ok(render_with_coverage(template, size)?.0)
}

/// Fraction of each pixel covered by the sign silhouette, row-major.
pub fn silhouette_coverage(template: &SignTemplate, size: usize) -> Result<Vec<f32>> {
    Ok(render_with_coverage(template, size)?.1)
}

fn render_with_coverage(template: &SignTemplate, size: usize) -> Result<(Raster, Vec<f32>)> {
    if size < 16 {
        return Err(Error::validation(format!("render size {size} is below 16")));
    }
    template.validate()?;
    let n = SUPERSAMPLE;
    let fine = (size * n) as f32;
    let mut out = Raster::new(size, size);
    let mut coverage = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            // f64 accumulation keeps uniform regions exact
            let mut acc = [0.0f64; 3];
            let mut inside = 0usize;
            for sy in 0..n {
                for sx in 0..n {
                    let p = [
                        ((x * n + sx) as f32 + 0.5) / fine,
                        ((y * n + sy) as f32 + 0.5) / fine,
                    ];
                    let c = match template.color_at(p) {
                        Some(c) => {
                            inside += 1;
                            c
                        }
                        None => BACKGROUND,
                    };
                    for k in 0..3 {
                        acc[k] += c[k] as f64;
                    }
                }
            }
            let denom = (n * n) as f64;
            out.set_pixel(
                x,
                y,
                [
                    (acc[0] / denom) as f32,
                    (acc[1] / denom) as f32,
                    (acc[2] / denom) as f32,
                ],
            );
            coverage[y * size + x] = inside as f32 / denom as f32;
        }
    }
    Ok((out, coverage))
}

/// A (condition, target) pair for conditional image-to-image training.
#[derive(Clone, Debug, PartialEq)]
pub struct PairedSample {
    pub symbolic: Arc<Raster>,
    pub real: Arc<Raster>,
    pub class_index: usize,
}

/// Pairs a real sample with the symbolic rendering of its class at the
/// sample's resolution.
pub fn compose_pair(real: &ImageSample, template: &SignTemplate) -> Result<PairedSample> {
    if real.class_index != template.class_index {
        return Err(Error::ClassMismatch {
            sample: real.class_index,
            template: template.class_index,
        });
    }
    if real.pixels.width() != real.pixels.height() {
        return Err(Error::Dimension {
            expected: "square raster".into(),
            actual: format!("{}x{}", real.pixels.width(), real.pixels.height()),
        });
    }
    Ok(PairedSample {
        symbolic: Arc::new(render_symbolic(template, real.pixels.width())?),
        real: Arc::clone(&real.pixels),
        class_index: real.class_index,
    })
}

/// Pairs every sample of `dataset` with its class template.
pub fn compose_pairs(dataset: &Dataset, library: &TemplateLibrary) -> Result<Vec<PairedSample>> {
    let mut cache: BTreeMap<usize, Arc<Raster>> = BTreeMap::new();
    dataset
        .samples()
        .iter()
        .map(|s| {
            let template = library.get(s.class_index)?;
            if s.class_index != template.class_index {
                return Err(Error::ClassMismatch {
                    sample: s.class_index,
                    template: template.class_index,
                });
            }
            let symbolic = match cache.get(&s.class_index) {
                Some(r) if r.width() == s.pixels.width() => Arc::clone(r),
                _ => {
                    let pair = compose_pair(s, template)?;
                    cache.insert(s.class_index, Arc::clone(&pair.symbolic));
                    return Ok(pair);
                }
            };
            Ok(PairedSample {
                symbolic,
                real: Arc::clone(&s.pixels),
                class_index: s.class_index,
            })
        })
        .collect()
}

/// Limits on the random perturbations applied by [`synthesize_realistic`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct JitterBudget {
    /// Additive brightness offset bound.
    pub brightness: f32,
    /// Hue rotation bound in degrees.
    pub hue_deg: f32,
    /// Largest pixel displacement of the affine warp.
    pub warp_px: f32,
    /// Standard deviation of additive Gaussian noise.
    pub noise_sigma: f32,
    /// Amplitude of the background clutter around the sign.
    pub clutter: f32,
}

impl Default for JitterBudget {
    fn default() -> Self {
        Self {
            brightness: 0.2,
            hue_deg: 10.0,
            warp_px: 3.0,
            noise_sigma: 0.02,
            clutter: 0.35,
        }
    }
}

/// Renders `template` and perturbs it into a photograph-like sample:
/// affine warp, background clutter, hue and brightness jitter, then
/// sensor noise. Deterministic in `(template, seed)`.
pub fn synthesize_realistic(template: &SignTemplate, seed: u64) -> Result<ImageSample> {
    synthesize_with_budget(template, seed, &JitterBudget::default())
}

pub fn synthesize_with_budget(
    template: &SignTemplate,
    seed: u64,
    budget: &JitterBudget,
) -> Result<ImageSample> {
    let size = IMAGE_SIZE;
    let (clean, coverage) = render_with_coverage(template, size)?;
    let mut rng = rng_for(seed, &[template.class_index as u64]);
    let sym = |rng: &mut rand_chacha::ChaCha8Rng, bound: f32| -> f32 {
        if bound > 0.0 {
            rng.random_range(-bound..=bound)
        } else {
            0.0
        }
    };

    // Warp: rotation about the center plus translation, with the
    // displacement split evenly between the two.
    let half = budget.warp_px * 0.5;
    let corner_radius = (size as f32) * std::f32::consts::FRAC_1_SQRT_2;
    let theta = sym(&mut rng, half / corner_radius);
    let t = sym(&mut rng, half);
    let phi = rng.random_range(0.0..std::f32::consts::TAU);
    let (tx, ty) = (t * phi.cos(), t * phi.sin());
    let brightness = sym(&mut rng, budget.brightness);
    let hue = sym(&mut rng, budget.hue_deg);

    let clutter = background_clutter(&mut rng, size, budget.clutter);
    let coverage_img = Raster::from_fn(size, size, |x, y| [coverage[y * size + x]; 3]);
    let c = (size as f32 - 1.0) * 0.5;
    let (cos, sin) = (theta.cos(), theta.sin());
    let hue_m = hue_matrix(hue);
    let noise = Normal::new(0.0f32, budget.noise_sigma.max(0.0)).expect("finite sigma");

    let mut out = Raster::new(size, size);
    for y in 0..size {
        for x in 0..size {
            // inverse map output pixel to the clean render
            let (dx, dy) = (x as f32 - c - tx, y as f32 - c - ty);
            let sx = c + cos * dx + sin * dy;
            let sy = c - sin * dx + cos * dy;
            let a = sample_clamped(&coverage_img, sx, sy, 0);
            let mut rgb = [0.0; 3];
            for (k, v) in rgb.iter_mut().enumerate() {
                let sign = sample_clamped(&clean, sx, sy, k);
                *v = a * sign + (1.0 - a) * clutter.get(x, y, k);
            }
            let mut px = [0.0; 3];
            for (k, v) in px.iter_mut().enumerate() {
                let rotated: f32 = (0..3).map(|j| hue_m[k][j] * rgb[j]).sum();
                let n = if budget.noise_sigma > 0.0 {
                    noise.sample(&mut rng)
                } else {
                    0.0
                };
                *v = (rotated + brightness + n).clamp(0.0, 1.0);
            }
            out.set_pixel(x, y, px);
        }
    }

    let norm = |v: f32, b: f32| if b > 0.0 { (v.abs() / b).min(1.0) } else { 0.0 };
    let warp = theta.abs() * corner_radius + t.abs();
    let quality = 1.0
        - (norm(brightness, budget.brightness)
            + norm(hue, budget.hue_deg)
            + norm(warp, budget.warp_px))
            / 3.0;
    let margin = ((1.0 - 2.0 * CIRCLE_RADIUS) * 0.5 * size as f32).round() as i64;
    let extent = size as i64 - 2 * margin;
    Ok(ImageSample {
        pixels: Arc::new(out),
        class_index: template.class_index,
        split: Split::Train,
        bbox: Some(BBox(
            margin + tx.round() as i64,
            margin + ty.round() as i64,
            extent,
            extent,
        )),
        quality: Some(quality.clamp(0.0, 1.0) as f64),
    })
}

fn hue_matrix(deg: f32) -> [[f32; 3]; 3] {
    // rotation about the gray axis
    let (s, c) = deg.to_radians().sin_cos();
    let k = 1.0 / 3.0;
    let r = 3.0f32.sqrt().recip();
    let a = c + (1.0 - c) * k;
    let b = k * (1.0 - c) - r * s;
    let d = k * (1.0 - c) + r * s;
    [[a, b, d], [d, a, b], [b, d, a]]
}

fn background_clutter(rng: &mut impl Rng, size: usize, amplitude: f32) -> Raster {
    let base: Rgb = [
        0.5 + rng.random_range(-0.5..=0.5) * amplitude,
        0.5 + rng.random_range(-0.5..=0.5) * amplitude,
        0.5 + rng.random_range(-0.5..=0.5) * amplitude,
    ];
    let gx: Rgb = [0, 1, 2].map(|_| rng.random_range(-0.5..=0.5) * amplitude);
    let gy: Rgb = [0, 1, 2].map(|_| rng.random_range(-0.5..=0.5) * amplitude);
    let blobs: Vec<(f32, f32, f32, Rgb)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..size as f32),
                rng.random_range(0.0..size as f32),
                rng.random_range(4.0..16.0),
                [0, 1, 2].map(|_| rng.random_range(-0.5..=0.5) * amplitude),
            )
        })
        .collect();
    let s = size as f32;
    Raster::from_fn(size, size, |x, y| {
        let (u, v) = (x as f32 / s - 0.5, y as f32 / s - 0.5);
        let mut px = [0.0; 3];
        for k in 0..3 {
            px[k] = base[k] + gx[k] * u + gy[k] * v;
        }
        for (bx, by, r, col) in &blobs {
            let d2 = ((x as f32 - bx).powi(2) + (y as f32 - by).powi(2)) / (r * r);
            let w = (-d2).exp();
            for k in 0..3 {
                px[k] += col[k] * w;
            }
        }
        px.map(|v| v.clamp(0.0, 1.0))
    })
}

/// Builds a class-balanced desk-scale dataset of synthesized samples.
/// Samples are ordered round-robin over classes, training split first.
pub fn synthesize_dataset(
    library: &TemplateLibrary,
    train_per_class: usize,
    test_per_class: usize,
    seed: u64,
) -> Result<Dataset> {
    let classes = library.num_classes();
    let mut samples = Vec::with_capacity(classes * (train_per_class + test_per_class));
    for (split, count, tag) in [
        (Split::Train, train_per_class, 0u64),
        (Split::Test, test_per_class, 1u64),
    ] {
        for i in 0..count {
            for class in 0..classes {
                let template = library.get(class)?;
                let sample_seed = crate::seed::derive_seed(seed, &[tag, class as u64, i as u64]);
                let mut s = synthesize_realistic(template, sample_seed)?;
                s.split = split;
                samples.push(s);
            }
        }
    }
    Dataset::new(samples, classes, library.family())
}

/// Templates for one shape family, keyed by class index.
#[derive(Clone, Debug, PartialEq)]
pub struct TemplateLibrary {
    family: ShapeFamily,
    templates: BTreeMap<usize, SignTemplate>,
}

impl TemplateLibrary {
    pub fn new(family: ShapeFamily, templates: Vec<SignTemplate>) -> Result<Self> {
        let mut map = BTreeMap::new();
        for t in templates {
            t.validate()?;
            let class = t.class_index;
            if map.insert(class, t).is_some() {
                return Err(Error::validation(format!("duplicate template for class {class}")));
            }
        }
        let lib = Self {
            family,
            templates: map,
        };
        if let Some(required) = family.required_classes() {
            lib.check_covers(required)?;
        }
        Ok(lib)
    }

    /// The built-in library for a family. For the synthetic family the
    /// first `classes` entries of a mixed circular/triangular list are used.
    pub fn builtin(family: ShapeFamily, classes: usize) -> Result<Self> {
        match family {
            ShapeFamily::Circular => Self::new(family, circular_templates()),
            ShapeFamily::Triangular => Self::new(family, triangular_templates()),
            ShapeFamily::Synthetic => {
                let circular = circular_templates();
                let triangular = triangular_templates();
                let total = circular.len() + triangular.len();
                if classes == 0 || classes > total {
                    return Err(Error::config(format!(
                        "synthetic library supports 1..={total} classes, got {classes}"
                    )));
                }
                // alternate shapes so small libraries mix both silhouettes
                let mut mixed = Vec::with_capacity(total);
                let (mut c, mut t) = (circular.into_iter(), triangular.into_iter());
                loop {
                    let next = [c.next(), c.next(), t.next()];
                    if next.iter().all(Option::is_none) {
                        break;
                    }
                    mixed.extend(next.into_iter().flatten());
                }
                let templates = mixed
                    .into_iter()
                    .take(classes)
                    .enumerate()
                    .map(|(i, mut t)| {
                        t.class_index = i;
                        t
                    })
                    .collect();
                let lib = Self::new(family, templates)?;
                lib.check_covers(classes)?;
                Ok(lib)
            }
        }
    }

    /// Reads one `<class>.json` file per class from `dir`.
    pub fn load_dir(dir: &Path, family: ShapeFamily) -> Result<Self> {
        let mut entries: Vec<_> = fs::read_dir(dir)
            .map_err(|e| Error::io(dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        entries.sort();
        let mut templates = Vec::with_capacity(entries.len());
        for path in entries {
            let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let t = SignTemplate::from_json(&text)
                .map_err(|e| Error::validation(format!("{}: {e}", path.display())))?;
            templates.push(t);
        }
        Self::new(family, templates)
    }

    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (class, t) in &self.templates {
            let path = dir.join(format!("{class:02}.json"));
            let mut text = serde_json::to_string_pretty(t)?;
            text.push('\n');
            fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        }
        Ok(())
    }

    pub fn family(&self) -> ShapeFamily {
        self.family
    }

    pub fn num_classes(&self) -> usize {
        self.templates.len()
    }

    pub fn get(&self, class_index: usize) -> Result<&SignTemplate> {
        self.templates
            .get(&class_index)
            .ok_or(Error::MissingTemplate(class_index))
    }

    pub fn templates(&self) -> impl Iterator<Item = &SignTemplate> {
        self.templates.values()
    }

    pub fn check_covers(&self, classes: usize) -> Result<()> {
        match (0..classes).find(|c| !self.templates.contains_key(c)) {
            Some(c) => Err(Error::MissingTemplate(c)),
            None => Ok(()),
        }
    }
}

const RED: Rgb = [0.80, 0.10, 0.12];
const WHITE: Rgb = [0.95, 0.95, 0.95];
const BLUE: Rgb = [0.10, 0.30, 0.75];
const BLACK: Rgb = [0.08, 0.08, 0.08];
const DARK_GRAY: Rgb = [0.30, 0.30, 0.30];
const GRAY: Rgb = [0.62, 0.62, 0.62];
const YELLOW: Rgb = [0.95, 0.78, 0.10];
const GREEN: Rgb = [0.10, 0.65, 0.25];

fn number(n: u32, center: Point, height: f32, color: Rgb) -> Vec<Primitive> {
    let digits: Vec<u8> = n.to_string().bytes().map(|b| b - b'0').collect();
    let advance = height * 0.8;
    let start = center[0] - advance * (digits.len() as f32 - 1.0) / 2.0;
    digits
        .iter()
        .enumerate()
        .map(|(i, &d)| Primitive::Digit {
            digit: d,
            center: [start + advance * i as f32, center[1]],
            height,
            stroke: height * 0.16,
            color,
        })
        .collect()
}

fn line(from: Point, to: Point, width: f32, color: Rgb) -> Primitive {
    Primitive::Line {
        from,
        to,
        width,
        color,
    }
}

fn arrow(from: Point, to: Point, width: f32, color: Rgb) -> Primitive {
    Primitive::Arrow {
        from,
        to,
        width,
        head: 0.14,
        color,
    }
}

fn disc(center: Point, radius: f32, color: Rgb) -> Primitive {
    Primitive::Disc {
        center,
        radius,
        color,
    }
}

fn ring(center: Point, radius: f32, width: f32, color: Rgb) -> Primitive {
    Primitive::Arc {
        center,
        radius,
        start_deg: 0.0,
        end_deg: 360.0,
        width,
        color,
    }
}

fn circle(class_index: usize, name: &str, border: Rgb, face: Rgb, bw: f32, p: Vec<Primitive>) -> SignTemplate {
    SignTemplate {
        shape: SignShape::Circle,
        class_index,
        name: name.to_string(),
        border_color: border,
        face_color: face,
        border_width: bw,
        pictogram: p,
    }
}

fn speed_limit(class: usize, n: u32) -> SignTemplate {
    circle(
        class,
        &format!("speed limit {n}"),
        RED,
        WHITE,
        0.08,
        number(n, [0.5, 0.5], 0.34, BLACK),
    )
}

fn end_speed_limit(class: usize, n: u32) -> SignTemplate {
    let mut p = number(n, [0.5, 0.5], 0.34, GRAY);
    p.push(line([0.80, 0.20], [0.20, 0.80], 0.05, DARK_GRAY));
    circle(class, &format!("end speed limit {n}"), DARK_GRAY, WHITE, 0.03, p)
}

fn mandatory(class: usize, name: &str, p: Vec<Primitive>) -> SignTemplate {
    circle(class, name, WHITE, BLUE, 0.025, p)
}

fn prohibition(class: usize, name: &str, p: Vec<Primitive>) -> SignTemplate {
    circle(class, name, RED, WHITE, 0.08, p)
}

fn car(x: f32, color: Rgb) -> Vec<Primitive> {
    vec![
        line([x, 0.40], [x, 0.60], 0.12, color),
        disc([x - 0.05, 0.62], 0.025, color),
        disc([x + 0.05, 0.62], 0.025, color),
    ]
}

fn truck(x: f32, color: Rgb) -> Vec<Primitive> {
    vec![
        line([x - 0.01, 0.38], [x - 0.01, 0.60], 0.14, color),
        line([x + 0.02, 0.32], [x + 0.02, 0.40], 0.08, color),
        disc([x - 0.06, 0.63], 0.03, color),
        disc([x + 0.06, 0.63], 0.03, color),
    ]
}

fn bicycle(cy: f32, scale: f32, color: Rgb) -> Vec<Primitive> {
    let w = 0.025 * scale.max(0.6);
    let (l, r) = ([0.5 - 0.13 * scale, cy], [0.5 + 0.13 * scale, cy]);
    vec![
        ring(l, 0.08 * scale, w, color),
        ring(r, 0.08 * scale, w, color),
        Primitive::Polyline {
            points: vec![l, [0.5, cy], [0.5 + 0.06 * scale, cy - 0.12 * scale], r],
            width: w,
            color,
        },
        line([0.5 - 0.04 * scale, cy - 0.12 * scale], [0.5 + 0.08 * scale, cy - 0.12 * scale], w, color),
    ]
}

fn person(cx: f32, cy: f32, h: f32, color: Rgb) -> Vec<Primitive> {
    let w = h * 0.14;
    vec![
        disc([cx, cy - h * 0.42], h * 0.1, color),
        line([cx, cy - h * 0.28], [cx, cy + h * 0.08], w, color),
        line([cx, cy + h * 0.08], [cx - h * 0.14, cy + h * 0.45], w, color),
        line([cx, cy + h * 0.08], [cx + h * 0.14, cy + h * 0.45], w, color),
        line([cx - h * 0.18, cy - h * 0.05], [cx + h * 0.18, cy - h * 0.15], w * 0.8, color),
    ]
}

/// The 36 circular sign classes.
pub fn circular_templates() -> Vec<SignTemplate> {
    let slash = || line([0.78, 0.22], [0.22, 0.78], 0.08, RED);
    vec![
        speed_limit(0, 20),
        speed_limit(1, 30),
        speed_limit(2, 40),
        speed_limit(3, 50),
        mandatory(4, "direction right", vec![arrow([0.25, 0.5], [0.78, 0.5], 0.09, WHITE)]),
        speed_limit(5, 60),
        speed_limit(6, 70),
        speed_limit(7, 80),
        end_speed_limit(8, 70),
        speed_limit(9, 100),
        speed_limit(10, 120),
        prohibition(11, "no passing", [car(0.38, BLACK), car(0.62, RED)].concat()),
        prohibition(12, "no passing for trucks", [truck(0.37, RED), car(0.63, BLACK)].concat()),
        circle(13, "no entry", RED, RED, 0.0, vec![line([0.24, 0.5], [0.76, 0.5], 0.15, WHITE)]),
        prohibition(14, "no vehicles", vec![]),
        prohibition(15, "no trucks", truck(0.5, BLACK)),
        prohibition(
            16,
            "no u-turn",
            vec![
                Primitive::Arc {
                    center: [0.5, 0.42],
                    radius: 0.12,
                    start_deg: 0.0,
                    end_deg: 180.0,
                    width: 0.06,
                    color: BLACK,
                },
                line([0.62, 0.42], [0.62, 0.68], 0.06, BLACK),
                arrow([0.38, 0.42], [0.38, 0.72], 0.06, BLACK),
                slash(),
            ],
        ),
        prohibition(
            17,
            "no left turn",
            vec![
                line([0.56, 0.74], [0.56, 0.45], 0.07, BLACK),
                arrow([0.56, 0.45], [0.28, 0.45], 0.07, BLACK),
                slash(),
            ],
        ),
        prohibition(
            18,
            "no right turn",
            vec![
                line([0.44, 0.74], [0.44, 0.45], 0.07, BLACK),
                arrow([0.44, 0.45], [0.72, 0.45], 0.07, BLACK),
                line([0.22, 0.22], [0.78, 0.78], 0.08, RED),
            ],
        ),
        circle(
            19,
            "no stopping",
            RED,
            BLUE,
            0.08,
            vec![
                line([0.25, 0.25], [0.75, 0.75], 0.08, RED),
                line([0.75, 0.25], [0.25, 0.75], 0.08, RED),
            ],
        ),
        circle(20, "no parking", RED, BLUE, 0.08, vec![line([0.25, 0.25], [0.75, 0.75], 0.08, RED)]),
        mandatory(21, "direction left", vec![arrow([0.75, 0.5], [0.22, 0.5], 0.09, WHITE)]),
        mandatory(22, "pass left", vec![arrow([0.66, 0.28], [0.3, 0.7], 0.09, WHITE)]),
        mandatory(23, "pass right", vec![arrow([0.34, 0.28], [0.7, 0.7], 0.09, WHITE)]),
        mandatory(24, "straight ahead", vec![arrow([0.5, 0.78], [0.5, 0.2], 0.09, WHITE)]),
        mandatory(
            25,
            "straight or right",
            vec![
                arrow([0.42, 0.8], [0.42, 0.2], 0.08, WHITE),
                arrow([0.42, 0.55], [0.76, 0.4], 0.07, WHITE),
            ],
        ),
        mandatory(
            26,
            "straight or left",
            vec![
                arrow([0.58, 0.8], [0.58, 0.2], 0.08, WHITE),
                arrow([0.58, 0.55], [0.24, 0.4], 0.07, WHITE),
            ],
        ),
        mandatory(
            27,
            "roundabout",
            vec![
                Primitive::Arc {
                    center: [0.5, 0.5],
                    radius: 0.2,
                    start_deg: 20.0,
                    end_deg: 340.0,
                    width: 0.07,
                    color: WHITE,
                },
                arrow([0.72, 0.6], [0.69, 0.44], 0.05, WHITE),
            ],
        ),
        circle(
            28,
            "end of all restrictions",
            DARK_GRAY,
            WHITE,
            0.03,
            vec![
                line([0.70, 0.16], [0.16, 0.70], 0.03, DARK_GRAY),
                line([0.80, 0.20], [0.20, 0.80], 0.03, DARK_GRAY),
                line([0.84, 0.30], [0.30, 0.84], 0.03, DARK_GRAY),
            ],
        ),
        circle(
            29,
            "end no passing",
            DARK_GRAY,
            WHITE,
            0.03,
            [
                car(0.38, GRAY),
                car(0.62, GRAY),
                vec![line([0.80, 0.20], [0.20, 0.80], 0.05, DARK_GRAY)],
            ]
            .concat(),
        ),
        end_speed_limit(30, 60),
        end_speed_limit(31, 80),
        end_speed_limit(32, 50),
        mandatory(33, "bicycle path", bicycle(0.55, 1.0, WHITE)),
        mandatory(34, "pedestrian path", person(0.5, 0.52, 0.55, WHITE)),
        end_speed_limit(35, 30),
    ]
}

fn warning(class: usize, name: &str, p: Vec<Primitive>) -> SignTemplate {
    SignTemplate {
        shape: SignShape::Triangle,
        class_index: class,
        name: name.to_string(),
        border_color: RED,
        face_color: WHITE,
        border_width: 0.09,
        pictogram: p,
    }
}

/// The 16 triangular (warning) sign classes.
pub fn triangular_templates() -> Vec<SignTemplate> {
    let w = 0.05;
    vec![
        warning(
            0,
            "general caution",
            vec![line([0.5, 0.42], [0.5, 0.64], 0.06, BLACK), disc([0.5, 0.74], 0.035, BLACK)],
        ),
        warning(
            1,
            "curve left",
            vec![Primitive::Polyline {
                points: vec![[0.54, 0.8], [0.54, 0.56], [0.42, 0.42]],
                width: w,
                color: BLACK,
            }],
        ),
        warning(
            2,
            "curve right",
            vec![Primitive::Polyline {
                points: vec![[0.46, 0.8], [0.46, 0.56], [0.58, 0.42]],
                width: w,
                color: BLACK,
            }],
        ),
        warning(
            3,
            "double curve",
            vec![Primitive::Polyline {
                points: vec![[0.44, 0.8], [0.56, 0.66], [0.44, 0.52], [0.54, 0.4]],
                width: w,
                color: BLACK,
            }],
        ),
        warning(
            4,
            "bumpy road",
            vec![
                Primitive::Arc {
                    center: [0.42, 0.74],
                    radius: 0.07,
                    start_deg: 0.0,
                    end_deg: 180.0,
                    width: w,
                    color: BLACK,
                },
                Primitive::Arc {
                    center: [0.58, 0.74],
                    radius: 0.07,
                    start_deg: 0.0,
                    end_deg: 180.0,
                    width: w,
                    color: BLACK,
                },
            ],
        ),
        warning(
            5,
            "slippery road",
            vec![
                line([0.42, 0.5], [0.58, 0.5], 0.08, BLACK),
                Primitive::Polyline {
                    points: vec![[0.38, 0.78], [0.44, 0.66], [0.5, 0.78], [0.56, 0.66], [0.62, 0.78]],
                    width: 0.03,
                    color: BLACK,
                },
            ],
        ),
        warning(
            6,
            "road narrows",
            vec![
                Primitive::Polyline {
                    points: vec![[0.38, 0.8], [0.44, 0.62], [0.44, 0.42]],
                    width: w,
                    color: BLACK,
                },
                Primitive::Polyline {
                    points: vec![[0.62, 0.8], [0.56, 0.62], [0.56, 0.42]],
                    width: w,
                    color: BLACK,
                },
            ],
        ),
        warning(
            7,
            "road works",
            [
                person(0.46, 0.62, 0.36, BLACK),
                vec![line([0.56, 0.58], [0.62, 0.78], 0.03, BLACK), line([0.36, 0.8], [0.66, 0.8], 0.03, BLACK)],
            ]
            .concat(),
        ),
        warning(
            8,
            "traffic signals",
            vec![
                line([0.5, 0.42], [0.5, 0.8], 0.12, BLACK),
                disc([0.5, 0.46], 0.04, RED),
                disc([0.5, 0.61], 0.04, YELLOW),
                disc([0.5, 0.76], 0.04, GREEN),
            ],
        ),
        warning(9, "pedestrians", person(0.5, 0.62, 0.4, BLACK)),
        warning(10, "children", [person(0.42, 0.64, 0.36, BLACK), person(0.58, 0.66, 0.3, BLACK)].concat()),
        warning(11, "bicycles crossing", bicycle(0.7, 0.8, BLACK)),
        warning(
            12,
            "ice or snow",
            vec![
                line([0.5, 0.46], [0.5, 0.8], 0.035, BLACK),
                line([0.36, 0.55], [0.64, 0.71], 0.035, BLACK),
                line([0.36, 0.71], [0.64, 0.55], 0.035, BLACK),
            ],
        ),
        warning(
            13,
            "wild animals",
            vec![
                Primitive::Polyline {
                    points: vec![[0.36, 0.8], [0.40, 0.64], [0.58, 0.62], [0.62, 0.8]],
                    width: 0.045,
                    color: BLACK,
                },
                Primitive::Polyline {
                    points: vec![[0.58, 0.62], [0.64, 0.48], [0.60, 0.42]],
                    width: 0.04,
                    color: BLACK,
                },
            ],
        ),
        warning(
            14,
            "crossroads",
            vec![line([0.5, 0.42], [0.5, 0.82], 0.06, BLACK), line([0.34, 0.64], [0.66, 0.64], 0.06, BLACK)],
        ),
        warning(
            15,
            "priority at next intersection",
            vec![line([0.5, 0.40], [0.5, 0.82], 0.1, BLACK), line([0.34, 0.62], [0.66, 0.62], 0.035, BLACK)],
        ),
    ]
}

/// Templates for signs that are not part of any training family, used to
/// probe generation on unseen inputs. Class indices start past the
/// circular family's range.
pub fn novel_templates() -> Vec<SignTemplate> {
    let base = crate::dataset::CIRCULAR_CLASSES;
    let mut out = vec![
        end_speed_limit(base, 40),
        speed_limit(base + 1, 90),
        end_speed_limit(base + 2, 100),
    ];
    out.push(mandatory(
        base + 3,
        "turn right ahead",
        vec![
            line([0.42, 0.78], [0.42, 0.45], 0.09, WHITE),
            arrow([0.42, 0.45], [0.76, 0.45], 0.09, WHITE),
        ],
    ));
    out
}

pub fn find_novel(name: &str) -> Result<SignTemplate> {
    novel_templates()
        .into_iter()
        .find(|t| t.name == name)
        .ok_or_else(|| Error::validation(format!("no novel template named {name:?}")))
}
