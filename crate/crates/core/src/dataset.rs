//! Manifest-described image datasets: ingestion, persistence and subsetting.
//!
//! A manifest is a UTF-8 JSON Lines file. The first line is a header
//! record, every following line describes one sample:
//!
//! ```text
//! {"format":"augbench-manifest","version":1,"num_classes":36,"shape_family":"circular"}
//! {"path":"images/000000.png","class_index":4,"split":"train","bbox":[12,8,40,40],"quality":0.93}
//! ```
//!
//! `path` is relative to the manifest's directory. `bbox` and `quality`
//! may be `null` or omitted.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::raster::{rescale_image, Raster, IMAGE_SIZE};

pub const MANIFEST_FORMAT: &str = "augbench-manifest";
pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.jsonl";

pub const CIRCULAR_CLASSES: usize = 36;
pub const TRIANGULAR_CLASSES: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ShapeFamily {
    Circular,
    Triangular,
    Synthetic,
}

impl ShapeFamily {
    /// Class count fixed by the family, if any.
    pub fn required_classes(self) -> Option<usize> {
        match self {
            ShapeFamily::Circular => Some(CIRCULAR_CLASSES),
            ShapeFamily::Triangular => Some(TRIANGULAR_CLASSES),
            ShapeFamily::Synthetic => None,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ShapeFamily::Circular => "circular",
            ShapeFamily::Triangular => "triangular",
            ShapeFamily::Synthetic => "synthetic",
        }
    }
}

impl fmt::Display for ShapeFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ShapeFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circular" => Ok(ShapeFamily::Circular),
            "triangular" => Ok(ShapeFamily::Triangular),
            "synthetic" => Ok(ShapeFamily::Synthetic),
            other => Err(Error::config(format!("unknown shape family {other:?}"))),
        }
    }
}

/// Bounding box `(x, y, w, h)` in source-frame pixels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BBox(pub i64, pub i64, pub i64, pub i64);

impl BBox {
    pub fn area(&self) -> i64 {
        self.2.max(0) * self.3.max(0)
    }
}

/// One labeled image. Pixel buffers are reference counted so that derived
/// datasets can share rasters without copying them.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageSample {
    pub pixels: Arc<Raster>,
    pub class_index: usize,
    pub split: Split,
    pub bbox: Option<BBox>,
    pub quality: Option<f64>,
}

impl ImageSample {
    pub fn new(pixels: Raster, class_index: usize, split: Split) -> Self {
        Self {
            pixels: Arc::new(pixels),
            class_index,
            split,
            bbox: None,
            quality: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<ImageSample>,
    num_classes: usize,
    shape_family: ShapeFamily,
}

impl Dataset {
    /// Builds a dataset, checking labels and the family's class count.
    pub fn new(
        samples: Vec<ImageSample>,
        num_classes: usize,
        shape_family: ShapeFamily,
    ) -> Result<Self> {
        if let Some(required) = shape_family.required_classes() {
            if num_classes != required {
                return Err(Error::validation(format!(
                    "{shape_family} datasets have {required} classes, got {num_classes}"
                )));
            }
        }
        if num_classes == 0 {
            return Err(Error::validation("num_classes must be positive"));
        }
        if let Some((i, s)) = samples
            .iter()
            .enumerate()
            .find(|(_, s)| s.class_index >= num_classes)
        {
            return Err(Error::validation(format!(
                "sample {i} has class_index {} but num_classes is {num_classes}",
                s.class_index
            )));
        }
        Ok(Self {
            samples,
            num_classes,
            shape_family,
        })
    }

    pub fn empty_like(&self) -> Self {
        Self {
            samples: Vec::new(),
            num_classes: self.num_classes,
            shape_family: self.shape_family,
        }
    }

    /// Same metadata, different samples.
    pub fn with_samples(&self, samples: Vec<ImageSample>) -> Result<Self> {
        Self::new(samples, self.num_classes, self.shape_family)
    }

    pub fn samples(&self) -> &[ImageSample] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<ImageSample> {
        self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn shape_family(&self) -> ShapeFamily {
        self.shape_family
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.num_classes];
        for s in &self.samples {
            counts[s.class_index] += 1;
        }
        counts
    }

    pub fn labels(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.class_index).collect()
    }

    /// Samples of one split, in original order.
    pub fn split(&self, split: Split) -> Dataset {
        Dataset {
            samples: self
                .samples
                .iter()
                .filter(|s| s.split == split)
                .cloned()
                .collect(),
            num_classes: self.num_classes,
            shape_family: self.shape_family,
        }
    }
}

/// Size of a pool formed by appending `extra` samples to `base` samples.
pub fn merged_pool_size(base: usize, extra: usize) -> usize {
    base + extra
}

/// Appends `extra` to `base`. Both must share class count and family.
pub fn merge_datasets(base: &Dataset, extra: &Dataset) -> Result<Dataset> {
    if base.num_classes != extra.num_classes || base.shape_family != extra.shape_family {
        return Err(Error::validation(format!(
            "cannot merge {} dataset with {} classes into {} dataset with {} classes",
            extra.shape_family, extra.num_classes, base.shape_family, base.num_classes
        )));
    }
    let expected = merged_pool_size(base.len(), extra.len());
    let mut samples = Vec::with_capacity(expected);
    samples.extend_from_slice(&base.samples);
    samples.extend_from_slice(&extra.samples);
    debug_assert_eq!(samples.len(), expected);
    Ok(Dataset {
        samples,
        num_classes: base.num_classes,
        shape_family: base.shape_family,
    })
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestHeader {
    pub format: String,
    pub version: u32,
    pub num_classes: usize,
    pub shape_family: ShapeFamily,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub path: String,
    pub class_index: usize,
    pub split: Split,
    #[serde(default)]
    pub bbox: Option<BBox>,
    #[serde(default)]
    pub quality: Option<f64>,
}

/// Reads a manifest and every image it references. Images are rescaled to
/// 64×64; sample order follows manifest order.
pub fn load_dataset(manifest_path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(manifest_path).map_err(|source| Error::MissingManifest {
        path: manifest_path.to_path_buf(),
        source,
    })?;
    let base_dir = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let row_err = |row: usize, message: String| Error::ManifestRow {
        path: manifest_path.to_path_buf(),
        row,
        message,
    };

    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (_, header_line) = lines
        .next()
        .ok_or_else(|| Error::validation(format!("{}: missing header", manifest_path.display())))?;
    let header: ManifestHeader = serde_json::from_str(header_line)
        .map_err(|e| row_err(0, format!("bad header: {e}")))?;
    if header.format != MANIFEST_FORMAT || header.version != MANIFEST_VERSION {
        return Err(row_err(
            0,
            format!(
                "unsupported manifest format {:?} version {}",
                header.format, header.version
            ),
        ));
    }

    let mut samples = Vec::new();
    for (line_no, line) in lines {
        let row = line_no;
        let rec: ManifestRecord =
            serde_json::from_str(line).map_err(|e| row_err(row, e.to_string()))?;
        if rec.class_index >= header.num_classes {
            return Err(Error::validation(format!(
                "{} row {row}: class_index {} out of range for num_classes {}",
                manifest_path.display(),
                rec.class_index,
                header.num_classes
            )));
        }
        if let Some(q) = rec.quality {
            if !(0.0..=1.0).contains(&q) {
                return Err(row_err(row, format!("quality {q} outside [0, 1]")));
            }
        }
        let image_path = base_dir.join(&rec.path);
        let raster = Raster::load_png(&image_path)
            .map_err(|e| row_err(row, format!("cannot read image {}: {e}", rec.path)))?;
        let raster = rescale_image(&raster, IMAGE_SIZE)?;
        samples.push(ImageSample {
            pixels: Arc::new(raster),
            class_index: rec.class_index,
            split: rec.split,
            bbox: rec.bbox,
            quality: rec.quality,
        });
    }
    if samples.is_empty() {
        return Err(Error::validation("empty dataset"));
    }
    Dataset::new(samples, header.num_classes, header.shape_family)
}

/// Writes `dataset` as PNG files plus a manifest under `out_dir` and
/// returns the manifest path. Samples sharing one pixel buffer share one
/// image file.
pub fn save_dataset(dataset: &Dataset, out_dir: &Path) -> Result<PathBuf> {
    if dataset.is_empty() {
        return Err(Error::validation("empty dataset"));
    }
    let image_dir = out_dir.join("images");
    fs::create_dir_all(&image_dir).map_err(|e| Error::io(&image_dir, e))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    let file = fs::File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut w = BufWriter::new(file);
    let header = ManifestHeader {
        format: MANIFEST_FORMAT.to_string(),
        version: MANIFEST_VERSION,
        num_classes: dataset.num_classes,
        shape_family: dataset.shape_family,
    };
    let io = |e| Error::io(&manifest_path, e);
    writeln!(w, "{}", serde_json::to_string(&header)?).map_err(io)?;

    let mut written: HashMap<*const Raster, String> = HashMap::new();
    for sample in &dataset.samples {
        let key = Arc::as_ptr(&sample.pixels);
        let rel = match written.get(&key) {
            Some(rel) => rel.clone(),
            None => {
                let rel = format!("images/{:06}.png", written.len());
                sample.pixels.save_png(&out_dir.join(&rel))?;
                written.insert(key, rel.clone());
                rel
            }
        };
        let rec = ManifestRecord {
            path: rel,
            class_index: sample.class_index,
            split: sample.split,
            bbox: sample.bbox,
            quality: sample.quality,
        };
        writeln!(w, "{}", serde_json::to_string(&rec)?).map_err(io)?;
    }
    w.flush().map_err(io)?;
    Ok(manifest_path)
}

/// Picks the `n` highest-quality samples, preserving manifest order in the
/// result. Ties go to the earlier row.
///
/// Quality scores are used when every sample has one. Otherwise samples are
/// ranked by bounding-box area, with a missing box counting as zero.
pub fn select_gan_subset(dataset: &Dataset, n: usize) -> Result<Dataset> {
    if n > dataset.len() {
        return Err(Error::validation(format!(
            "requested {n} samples from a dataset of {}",
            dataset.len()
        )));
    }
    let use_quality = dataset.samples.iter().all(|s| s.quality.is_some());
    let score = |s: &ImageSample| -> f64 {
        if use_quality {
            s.quality.unwrap_or(0.0)
        } else {
            s.bbox.map_or(0.0, |b| b.area() as f64)
        }
    };
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    // stable sort keeps manifest order among equal scores
    order.sort_by(|&a, &b| score(&dataset.samples[b]).total_cmp(&score(&dataset.samples[a])));
    let mut chosen = order[..n].to_vec();
    chosen.sort_unstable();
    Ok(Dataset {
        samples: chosen.into_iter().map(|i| dataset.samples[i].clone()).collect(),
        num_classes: dataset.num_classes,
        shape_family: dataset.shape_family,
    })
}
