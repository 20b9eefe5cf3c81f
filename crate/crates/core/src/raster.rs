//! Floating-point RGB rasters.

use std::path::Path;

use image::RgbImage;

use crate::error::{Error, Result};

/// Side length every ingested sample is rescaled to.
pub const IMAGE_SIZE: usize = 64;

/// An RGB raster in row-major, channel-interleaved (HWC) layout with
/// values in `[0, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl Raster {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, [0.0; 3])
    }

    pub fn filled(width: usize, height: usize, rgb: [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for _ in 0..width * height {
            data.extend_from_slice(&rgb);
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Dimension {
                expected: format!("{} values for {width}x{height}x3", width * height * 3),
                actual: data.len().to_string(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                data.extend_from_slice(&f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * 3 + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * 3 + c] = v;
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: usize, y: usize, rgb: [f32; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn is_square(&self, size: usize) -> bool {
        self.width == size && self.height == size
    }

    pub fn clamp_unit(&mut self) {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
    }

    pub fn in_unit_range(&self) -> bool {
        self.data.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Mean absolute per-channel difference.
    pub fn mean_abs_diff(&self, other: &Raster) -> f32 {
        debug_assert_eq!(self.data.len(), other.data.len());
        let sum: f64 = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs() as f64)
            .sum();
        (sum / self.data.len().max(1) as f64) as f32
    }

    pub fn to_rgb8(&self) -> RgbImage {
        let bytes = self
            .data
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
            .collect();
        RgbImage::from_raw(self.width as u32, self.height as u32, bytes)
            .expect("buffer length matches dimensions")
    }

    pub fn from_rgb8(img: &RgbImage) -> Self {
        Self {
            width: img.width() as usize,
            height: img.height() as usize,
            data: img.as_raw().iter().map(|&b| b as f32 / 255.0).collect(),
        }
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_rgb8().save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        Ok(Self::from_rgb8(&img.to_rgb8()))
    }
}

/// Bilinear resampling to a `target`×`target` raster.
///
/// Pixel centers are aligned (`src = (dst + 0.5) * scale - 0.5`) and
/// coordinates are clamped at the border. An input that already has the
/// target size is returned unchanged.
pub fn rescale_image(src: &Raster, target: usize) -> Result<Raster> {
    if src.width == 0 || src.height == 0 || target == 0 {
        return Err(Error::validation(format!(
            "cannot rescale {}x{} raster to {target}x{target}",
            src.width, src.height
        )));
    }
    if src.is_square(target) {
        return Ok(src.clone());
    }
    let sx = src.width as f32 / target as f32;
    let sy = src.height as f32 / target as f32;
    let axis = |dst: usize, scale: f32, len: usize| {
        let pos = ((dst as f32 + 0.5) * scale - 0.5).clamp(0.0, (len - 1) as f32);
        let i0 = pos.floor() as usize;
        let i1 = (i0 + 1).min(len - 1);
        (i0, i1, pos - i0 as f32)
    };
    let cols: Vec<_> = (0..target).map(|x| axis(x, sx, src.width)).collect();
    let mut out = Raster::new(target, target);
    for y in 0..target {
        let (y0, y1, fy) = axis(y, sy, src.height);
        for (x, &(x0, x1, fx)) in cols.iter().enumerate() {
            for c in 0..3 {
                let top = lerp(src.get(x0, y0, c), src.get(x1, y0, c), fx);
                let bottom = lerp(src.get(x0, y1, c), src.get(x1, y1, c), fx);
                out.set(x, y, c, lerp(top, bottom, fy).clamp(0.0, 1.0));
            }
        }
    }
    Ok(out)
}

#[inline]
pub(crate) fn lerp(a: f32, b: f32, t: f32) -> f32 {
    a + t * (b - a)
}

/// Bilinear lookup at a real-valued position with border replication.
#[inline]
pub(crate) fn sample_clamped(src: &Raster, x: f32, y: f32, c: usize) -> f32 {
    let xc = x.clamp(0.0, (src.width - 1) as f32);
    let yc = y.clamp(0.0, (src.height - 1) as f32);
    let x0 = xc.floor() as usize;
    let y0 = yc.floor() as usize;
    let x1 = (x0 + 1).min(src.width - 1);
    let y1 = (y0 + 1).min(src.height - 1);
    let fx = xc - x0 as f32;
    let fy = yc - y0 as f32;
    let top = lerp(src.get(x0, y0, c), src.get(x1, y0, c), fx);
    let bottom = lerp(src.get(x0, y1, c), src.get(x1, y1, c), fx);
    lerp(top, bottom, fy)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Independent bilinear reference: explicit four-tap weights in f64.
    fn reference_bilinear(src: &Raster, target: usize) -> Vec<f64> {
        let mut out = Vec::new();
        for y in 0..target {
            for x in 0..target {
                let fx = ((x as f64 + 0.5) * src.width() as f64 / target as f64 - 0.5)
                    .max(0.0)
                    .min((src.width() - 1) as f64);
                let fy = ((y as f64 + 0.5) * src.height() as f64 / target as f64 - 0.5)
                    .max(0.0)
                    .min((src.height() - 1) as f64);
                let (x0, y0) = (fx.floor() as usize, fy.floor() as usize);
                let (x1, y1) = ((x0 + 1).min(src.width() - 1), (y0 + 1).min(src.height() - 1));
                let (ax, ay) = (fx - x0 as f64, fy - y0 as f64);
                for c in 0..3 {
                    let v = src.get(x0, y0, c) as f64 * (1.0 - ax) * (1.0 - ay)
                        + src.get(x1, y0, c) as f64 * ax * (1.0 - ay)
                        + src.get(x0, y1, c) as f64 * (1.0 - ax) * ay
                        + src.get(x1, y1, c) as f64 * ax * ay;
                    out.push(v);
                }
            }
        }
        out
    }

    #[test]
    fn rescale_identity_is_bit_identical() {
        let img = Raster::from_fn(64, 64, |x, y| [x as f32 / 63.0, y as f32 / 63.0, 0.25]);
        assert_eq!(rescale_image(&img, 64).unwrap(), img);
    }

    #[test]
    fn rescale_constant_field() {
        let img = Raster::filled(128, 128, [0.3; 3]);
        let out = rescale_image(&img, 64).unwrap();
        assert!(out.is_square(64));
        assert!(out.data().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn rescale_gradient_matches_reference() {
        let img = Raster::from_fn(32, 48, |x, y| {
            [x as f32 / 31.0, y as f32 / 47.0, ((x + y) % 7) as f32 / 6.0]
        });
        let out = rescale_image(&img, 64).unwrap();
        let reference = reference_bilinear(&img, 64);
        for (a, b) in out.data().iter().zip(&reference) {
            assert!((*a as f64 - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn rescale_rejects_empty() {
        assert!(rescale_image(&Raster::new(0, 4), 64).is_err());
        assert!(rescale_image(&Raster::new(4, 4), 0).is_err());
    }

    #[test]
    fn png_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("x.png");
        let img = Raster::from_fn(5, 3, |x, y| [x as f32 * 0.2, y as f32 * 0.33, 0.777]);
        img.save_png(&path).unwrap();
        let back = Raster::load_png(&path).unwrap();
        for (a, b) in img.data().iter().zip(back.data()) {
            assert!((a - b).abs() <= 1.0 / 255.0);
        }
    }
}
