//! Single-scale exposure fusion.

use super::ToneMap;
use crate::camera::ExposureStack;
use crate::image::{reflect_index, LdrImage};
use crate::imgproc::color::LUMA_WEIGHTS;

const WEIGHT_GUARD: f64 = 1e-12;
const WELL_EXPOSED_SIGMA: f64 = 0.2;

/// Exponents on contrast, saturation and well-exposedness.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct MertensParams {
    pub contrast: f64,
    pub saturation: f64,
    pub exposedness: f64,
}

impl Default for MertensParams {
    fn default() -> Self {
        Self {
            contrast: 1.0,
            saturation: 1.0,
            exposedness: 1.0,
        }
    }
}

fn raw_weights(img: &LdrImage, p: &MertensParams) -> Vec<f64> {
    let (w, h) = (img.width(), img.height());
    let unit: Vec<f64> = img.data().iter().map(|&z| z as f64 / 255.0).collect();
    let luma: Vec<f64> = unit
        .chunks_exact(3)
        .map(|c| LUMA_WEIGHTS[0] * c[0] + LUMA_WEIGHTS[1] * c[1] + LUMA_WEIGHTS[2] * c[2])
        .collect();
    let at = |x: isize, y: isize| luma[reflect_index(y, h) * w + reflect_index(x, w)];
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h as isize {
        for x in 0..w as isize {
            let lap = at(x - 1, y) + at(x + 1, y) + at(x, y - 1) + at(x, y + 1) - 4.0 * at(x, y);
            let i = (y as usize * w + x as usize) * 3;
            let px = &unit[i..i + 3];
            let mean = (px[0] + px[1] + px[2]) / 3.0;
            let sat = (px.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / 3.0).sqrt();
            let expo: f64 = px
                .iter()
                .map(|v| (-(v - 0.5).powi(2) / (2.0 * WELL_EXPOSED_SIGMA * WELL_EXPOSED_SIGMA)).exp())
                .product();
            out.push(lap.abs().powf(p.contrast) * sat.powf(p.saturation) * expo.powf(p.exposedness));
        }
    }
    out
}

/// Per-image weight maps, each pixel normalized across the stack after adding
/// a `1e-12` guard to every raw weight.
pub fn mertens_weights(images: &[LdrImage], params: &MertensParams) -> Vec<Vec<f64>> {
    let mut weights: Vec<Vec<f64>> = images
        .iter()
        .map(|im| raw_weights(im, params).into_iter().map(|v| v + WEIGHT_GUARD).collect())
        .collect();
    let n = weights.first().map_or(0, Vec::len);
    for i in 0..n {
        let total: f64 = weights.iter().map(|w| w[i]).sum();
        for w in &mut weights {
            w[i] /= total;
        }
    }
    weights
}

/// Weighted per-pixel blend of the `[0,1]`-scaled exposures.
pub fn mertens_fuse(stack: &ExposureStack, params: &MertensParams) -> ToneMap {
    fuse_images(stack.images(), params)
}

pub(crate) fn fuse_images(images: &[LdrImage], params: &MertensParams) -> ToneMap {
    let weights = mertens_weights(images, params);
    let (w, h) = (images[0].width(), images[0].height());
    let mut data = vec![0.0f64; w * h * 3];
    for (im, wt) in images.iter().zip(&weights) {
        for (i, (d, &z)) in data.iter_mut().zip(im.data()).enumerate() {
            *d += wt[i / 3] * z as f64 / 255.0;
        }
    }
    ToneMap::from_clipped(w, h, data.into_iter().map(|v| v as f32).collect()).expect("sizes agree")
}
