//! Tone-mapping operators, the TMQI quality index, and best-operator selection.

mod drago;
mod mertens;
mod reinhard;
mod select;
mod tmqi;

pub use drago::drago;
pub use mertens::{mertens_fuse, mertens_weights, MertensParams};
pub use reinhard::reinhard_global;
pub use select::{score_csv, select_best_tmo, Operator, Selection, SCORE_CSV_HEADER};
pub use tmqi::{structural_fidelity, statistical_naturalness, tmqi, TmqiParams, TmqiScore};

use crate::error::{Error, Result};
use crate::image::{LdrImage, Plane, RadianceMap};
use crate::imgproc::luminance;

/// Display-referred image with every sample in `[0,1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ToneMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl ToneMap {
    /// Clips every sample into `[0,1]` (NaN becomes 0).
    pub fn from_clipped(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height * 3 {
            return Err(Error::Shape(format!("{width}x{height} tone map needs {} values", width * height * 3)));
        }
        let data = data
            .into_iter()
            .map(|v| if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) })
            .collect();
        Ok(Self { width, height, data })
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

    pub fn to_radiance(&self) -> RadianceMap {
        RadianceMap::new(self.width, self.height, self.data.clone()).expect("tone map values are in [0,1]")
    }

    pub fn from_radiance(map: &RadianceMap) -> Self {
        Self::from_clipped(map.width(), map.height(), map.data().to_vec()).expect("sizes agree")
    }

    /// 8-bit quantization, rounding half up.
    pub fn to_ldr(&self) -> LdrImage {
        let data = self.data.iter().map(|&v| (v * 255.0 + 0.5).floor() as u8).collect();
        LdrImage::new(self.width, self.height, data, 1.0).expect("sizes agree")
    }

    pub fn luminance(&self) -> Plane {
        luminance(&self.to_radiance())
    }
}

/// Scales each pixel's colour by `new_l / old_l` and clips, keeping channel ratios.
pub(crate) fn rescale_luminance(map: &RadianceMap, old_l: &Plane, new_l: &[f64]) -> ToneMap {
    let mut data = Vec::with_capacity(map.data().len());
    for (i, px) in map.pixels().enumerate() {
        let l = old_l.data[i];
        let ratio = if l > 0.0 { new_l[i] / l } else { 0.0 };
        data.extend(px.map(|c| (c as f64 * ratio) as f32));
    }
    ToneMap::from_clipped(map.width(), map.height(), data).expect("sizes agree")
}
