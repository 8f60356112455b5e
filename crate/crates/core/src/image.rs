//! In-memory image containers shared by every stage.

use crate::error::{Error, Result};

/// Linear scene irradiance, row-major `H×W×3`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadianceMap {
    width: usize,
    height: usize,
    data: Vec<f32>,
}

impl RadianceMap {
    /// Builds a map after checking the length and that every value is finite and non-negative.
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if width * height * 3 != data.len() {
            return Err(Error::Shape(format!(
                "{}x{}x3 map needs {} values, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Validation(format!(
                "radiance sample {} is {} (must be finite and >= 0)",
                i, data[i]
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![0.0; width * height * 3],
        }
    }

    /// Builds a map from a per-pixel closure; negative or non-finite outputs are clamped to 0.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> [f32; 3]) -> Self {
        let mut data = Vec::with_capacity(width * height * 3);
        for y in 0..height {
            for x in 0..width {
                for v in f(x, y) {
                    data.push(if v.is_finite() && v > 0.0 { v } else { 0.0 });
                }
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

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f32; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn pixels(&self) -> impl Iterator<Item = [f32; 3]> + '_ {
        self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]])
    }

    /// One color channel as a plane.
    pub fn channel(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().skip(c).step_by(3).map(|&v| v as f64).collect(),
        }
    }

    /// Reassembles a map from three planes, clamping negatives to 0.
    pub fn from_channels(r: &Plane, g: &Plane, b: &Plane) -> Result<Self> {
        for p in [g, b] {
            if p.width != r.width || p.height != r.height {
                return Err(Error::Shape("channel planes differ in size".into()));
            }
        }
        let data = (0..r.data.len())
            .flat_map(|i| [r.data[i], g.data[i], b.data[i]])
            .map(|v| if v.is_finite() && v > 0.0 { v as f32 } else { 0.0 })
            .collect();
        Ok(Self {
            width: r.width,
            height: r.height,
            data,
        })
    }

    pub fn scaled(&self, k: f32) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v * k).collect(),
        }
    }
}

/// An 8-bit exposure with its relative exposure time.
#[derive(Debug, Clone, PartialEq)]
pub struct LdrImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
    exposure: f64,
}

impl LdrImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>, exposure: f64) -> Result<Self> {
        if width * height * 3 != data.len() {
            return Err(Error::Shape(format!(
                "{}x{}x3 image needs {} bytes, got {}",
                width,
                height,
                width * height * 3,
                data.len()
            )));
        }
        if !(exposure.is_finite() && exposure > 0.0) {
            return Err(Error::Validation(format!("exposure must be > 0, got {exposure}")));
        }
        Ok(Self {
            width,
            height,
            data,
            exposure,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn exposure(&self) -> f64 {
        self.exposure
    }

    pub fn with_exposure(mut self, exposure: f64) -> Result<Self> {
        if !(exposure.is_finite() && exposure > 0.0) {
            return Err(Error::Validation(format!("exposure must be > 0, got {exposure}")));
        }
        self.exposure = exposure;
        Ok(self)
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    /// Channel `c` scaled to `[0,1]`.
    pub fn channel_unit(&self, c: usize) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().skip(c).step_by(3).map(|&v| v as f64 / 255.0).collect(),
        }
    }
}

/// A single-channel float image.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width * height != data.len() {
            return Err(Error::Shape(format!(
                "{}x{} plane needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn same_size(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub fn transposed(&self) -> Self {
        Plane::from_fn(self.height, self.width, |x, y| self.get(y, x))
    }
}

/// Mirror index into `0..n` without repeating the edge sample (`-1 -> 1`).
pub(crate) fn reflect_index(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut m = i.rem_euclid(period);
    if m >= n as isize {
        m = period - m;
    }
    m as usize
}
