//! Weighted multi-exposure merge into a radiance map.

use crate::camera::{Crf, ExposureStack};
use crate::error::{Error, Result};
use crate::image::{LdrImage, RadianceMap};

/// Per-code confidence weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFn {
    values: [f64; 256],
}

impl WeightFn {
    /// Extremes must be distrusted (weight 0) and some code must carry weight.
    pub fn new(values: [f64; 256]) -> Result<Self> {
        if values[0] != 0.0 || values[255] != 0.0 {
            return Err(Error::Validation("weights at codes 0 and 255 must be 0".into()));
        }
        if values.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::Validation("weights must be finite and >= 0".into()));
        }
        if !values.iter().any(|&w| w > 0.0) {
            return Err(Error::Validation("at least one weight must be positive".into()));
        }
        Ok(Self { values })
    }

    #[inline]
    pub fn get(&self, code: u8) -> f64 {
        self.values[code as usize]
    }
}

/// Triangle weight: `z` below 128, `255 - z` from 128 up.
pub fn hat_weight() -> WeightFn {
    WeightFn {
        values: std::array::from_fn(|z| if z <= 127 { z as f64 } else { 255.0 - z as f64 }),
    }
}

/// Merges a validated five-image stack.
pub fn debevec_merge(stack: &ExposureStack, crf: &Crf, w: &WeightFn) -> Result<RadianceMap> {
    merge_exposures(stack.images(), crf, w)
}

/// Merges any non-empty set of aligned exposures, ordered by exposure time.
///
/// Per sample: `E = sum w(Z) f^-1(Z)/dt / sum w(Z)`. When every code has zero
/// weight, the middle exposure's `f^-1(Z)/dt` is used instead.
pub fn merge_exposures(images: &[LdrImage], crf: &Crf, w: &WeightFn) -> Result<RadianceMap> {
    let first = images
        .first()
        .ok_or_else(|| Error::Validation("cannot merge an empty stack".into()))?;
    let (width, height) = (first.width(), first.height());
    if images.iter().any(|im| im.width() != width || im.height() != height) {
        return Err(Error::Shape("stack images differ in size".into()));
    }
    if crf.channel_count() != 1 && crf.channel_count() != 3 {
        return Err(Error::Validation(format!(
            "CRF has {} channels, stack has 3",
            crf.channel_count()
        )));
    }
    let inverse: Vec<[f64; 256]> = (0..3).map(|c| crf.inverse_table(c)).collect();
    let mid = &images[images.len() / 2];

    let n = width * height * 3;
    let mut data = Vec::with_capacity(n);
    for i in 0..n {
        let c = i % 3;
        let (mut num, mut den) = (0.0f64, 0.0f64);
        for im in images {
            let z = im.data()[i];
            let wz = w.get(z);
            num += wz * inverse[c][z as usize] / im.exposure();
            den += wz;
        }
        let e = if den > 0.0 {
            num / den
        } else {
            inverse[c][mid.data()[i] as usize] / mid.exposure()
        };
        data.push(e as f32);
    }
    RadianceMap::new(width, height, data)
}
