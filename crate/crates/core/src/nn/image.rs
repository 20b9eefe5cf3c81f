use super::tensor::{Float, Tensor};
use crate::error::{Error, Result};
use crate::raster::Raster;

/// Packs square RGB rasters into an NCHW tensor, mapping `[0,1]` linearly
/// onto `[lo, hi]`.
pub fn rasters_to_tensor<T: Float>(images: &[&Raster], size: usize, lo: f64, hi: f64) -> Result<Tensor<T>> {
    let plane = size * size;
    let mut data = Vec::with_capacity(images.len() * 3 * plane);
    for img in images {
        if !img.is_square(size) {
            return Err(Error::Dimension {
                expected: format!("{size}x{size}x3"),
                actual: format!("{}x{}x3", img.width(), img.height()),
            });
        }
        let px = img.data();
        for c in 0..3 {
            data.extend((0..plane).map(|i| T::of(lo + (hi - lo) * px[i * 3 + c] as f64)));
        }
    }
    Ok(Tensor::from_vec([images.len(), 3, size, size], data))
}

/// Inverse of [`rasters_to_tensor`] for batch item `n`, clipped to `[0,1]`.
pub fn tensor_to_raster<T: Float>(t: &Tensor<T>, n: usize, lo: f64, hi: f64) -> Raster {
    let [_, c, h, w] = t.shape();
    assert_eq!(c, 3, "expected an RGB tensor");
    let item = t.item(n);
    let plane = h * w;
    Raster::from_fn(w, h, |x, y| {
        let i = y * w + x;
        let f = |ch: usize| (((item[ch * plane + i].as_f64() - lo) / (hi - lo)).clamp(0.0, 1.0)) as f32;
        [f(0), f(1), f(2)]
    })
}
