//! Forward camera model: CRF lookup tables, exposure synthesis, the exposure
//! ladders, and entropy-driven exposure selection.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::image::{LdrImage, RadianceMap};
use crate::imgproc::entropy;

/// Exposure times of the fixed five-shot stack.
pub const FIXED_EXPOSURES: [f64; 5] = [1.0, 8.0, 64.0, 512.0, 4096.0];

pub const STACK_LEN: usize = 5;

/// Camera response: per channel, a 256-entry non-decreasing table from
/// normalized exposure (sampled at `i/255`) to normalized code value.
#[derive(Debug, Clone, PartialEq)]
pub struct Crf {
    pub name: String,
    channels: Vec<[f64; 256]>,
}

impl Crf {
    /// Validates and wraps 1 (shared) or 3 per-channel tables.
    pub fn new(name: impl Into<String>, channels: Vec<[f64; 256]>) -> Result<Self> {
        if channels.len() != 1 && channels.len() != 3 {
            return Err(Error::Validation(format!(
                "a CRF has 1 or 3 channel tables, got {}",
                channels.len()
            )));
        }
        for (c, lut) in channels.iter().enumerate() {
            if lut[0] != 0.0 || lut[255] != 1.0 {
                return Err(Error::Validation(format!(
                    "channel {c}: table must start at 0 and end at 1"
                )));
            }
            if let Some(i) = (1..256).find(|&i| !(lut[i] >= lut[i - 1]) || !(0.0..=1.0).contains(&lut[i])) {
                return Err(Error::Validation(format!(
                    "channel {c}: table not monotone in [0,1] at index {i}"
                )));
            }
        }
        Ok(Self {
            name: name.into(),
            channels,
        })
    }

    /// Number of stored tables (1 means shared by R, G and B).
    pub fn channel_count(&self) -> usize {
        self.channels.len()
    }

    pub fn table(&self, channel: usize) -> &[f64; 256] {
        if self.channels.len() == 1 {
            &self.channels[0]
        } else {
            &self.channels[channel]
        }
    }

    /// `f(x)` for `x` in `[0,1]`, linearly interpolated between table samples.
    pub fn forward(&self, x: f64, channel: usize) -> f64 {
        let lut = self.table(channel);
        let t = x.clamp(0.0, 1.0) * 255.0;
        let i = (t.floor() as usize).min(254);
        let frac = t - i as f64;
        if frac == 0.0 {
            return lut[i];
        }
        lut[i] + frac * (lut[i + 1] - lut[i])
    }

    /// Precomputed `f^-1` for every code of one channel.
    pub fn inverse_table(&self, channel: usize) -> [f64; 256] {
        std::array::from_fn(|z| invert_crf(self, z as u8, channel))
    }

    /// Serializes to the `index r g b` text format.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for i in 0..256 {
            let _ = writeln!(
                s,
                "{i} {} {} {}",
                self.table(0)[i],
                self.table(1)[i],
                self.table(2)[i]
            );
        }
        s
    }
}

/// `f(x) = x^(1/gamma)`.
pub fn gamma_crf(gamma: f64) -> Result<Crf> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::Parameter(format!("gamma must be > 0, got {gamma}")));
    }
    let lut = std::array::from_fn(|i| {
        let x = i as f64 / 255.0;
        if gamma == 1.0 {
            x
        } else {
            x.powf(1.0 / gamma)
        }
    });
    Crf::new(format!("gamma-{gamma}"), vec![lut])
}

/// Parses 256 lines of `index r g b`. Blank lines and `#` comments are ignored.
pub fn load_crf(text: &str) -> Result<Crf> {
    let mut tables = vec![[0.0f64; 256]; 3];
    let mut seen = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let bad = || Error::Validation(format!("CRF line {}: expected `index r g b`", lineno + 1));
        if fields.len() != 4 {
            return Err(bad());
        }
        let idx: usize = fields[0].parse().map_err(|_| bad())?;
        if idx != seen || idx > 255 {
            return Err(Error::Validation(format!(
                "CRF line {}: index {idx} out of sequence (expected {seen})",
                lineno + 1
            )));
        }
        for c in 0..3 {
            tables[c][idx] = fields[c + 1].parse().map_err(|_| bad())?;
        }
        seen += 1;
    }
    if seen != 256 {
        return Err(Error::Validation(format!("CRF has {seen} entries, need 256")));
    }
    Crf::new("loaded", tables)
}

/// `f^-1(code/255)` by piecewise-linear inversion. A flat run of the table
/// that hits the target exactly maps to the middle of the run.
pub fn invert_crf(crf: &Crf, code: u8, channel: usize) -> f64 {
    let lut = crf.table(channel);
    let y = code as f64 / 255.0;
    if let Some(first) = lut.iter().position(|&v| v == y) {
        let last = first + lut[first..].iter().take_while(|&&v| v == y).count() - 1;
        return (first + last) as f64 / 2.0 / 255.0;
    }
    // strictly inside some segment lut[i] < y < lut[i+1]
    let i = lut.iter().rposition(|&v| v < y).unwrap_or(0).min(254);
    let (lo, hi) = (lut[i], lut[i + 1]);
    (i as f64 + (y - lo) / (hi - lo)) / 255.0
}

/// Quantizes `f(clip(E·dt))` to 8 bits, rounding half up.
pub fn expose(map: &RadianceMap, dt: f64, crf: &Crf) -> LdrImage {
    let data = map
        .data()
        .iter()
        .enumerate()
        .map(|(i, &e)| {
            let x = (e as f64 * dt).clamp(0.0, 1.0);
            (255.0 * crf.forward(x, i % 3) + 0.5).floor().min(255.0) as u8
        })
        .collect();
    LdrImage::new(map.width(), map.height(), data, dt).expect("exposure time is validated by the caller")
}

/// Strictly increasing list of exposure times.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureLadder {
    times: Vec<f64>,
}

impl ExposureLadder {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Parameter("exposure times must be > 0".into()));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Parameter("exposure times must be strictly increasing".into()));
        }
        Ok(Self { times })
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

/// `1, 4, 16, ..., 4^9`.
pub fn geometric_ladder() -> ExposureLadder {
    ExposureLadder {
        times: (0..10).map(|k| 4f64.powi(k)).collect(),
    }
}

/// Five aligned exposures of one scene, in increasing exposure order.
#[derive(Debug, Clone, PartialEq)]
pub struct ExposureStack {
    images: Vec<LdrImage>,
    ladder_indices: Vec<usize>,
}

impl ExposureStack {
    pub fn new(images: Vec<LdrImage>, ladder_indices: Vec<usize>) -> Result<Self> {
        if images.len() != STACK_LEN || ladder_indices.len() != STACK_LEN {
            return Err(Error::Validation(format!(
                "a stack holds exactly {STACK_LEN} images, got {}",
                images.len()
            )));
        }
        let (w, h) = (images[0].width(), images[0].height());
        if images.iter().any(|im| im.width() != w || im.height() != h) {
            return Err(Error::Shape("stack images differ in size".into()));
        }
        if images.windows(2).any(|p| p[1].exposure() <= p[0].exposure()) {
            return Err(Error::Validation("stack exposures must be strictly increasing".into()));
        }
        Ok(Self {
            images,
            ladder_indices,
        })
    }

    pub fn images(&self) -> &[LdrImage] {
        &self.images
    }

    pub fn ladder_indices(&self) -> &[usize] {
        &self.ladder_indices
    }

    pub fn exposures(&self) -> Vec<f64> {
        self.images.iter().map(LdrImage::exposure).collect()
    }

    pub fn width(&self) -> usize {
        self.images[0].width()
    }

    pub fn height(&self) -> usize {
        self.images[0].height()
    }
}

/// Exposes the map at 1, 8, 64, 512 and 4096.
pub fn fixed_stack(map: &RadianceMap, crf: &Crf) -> ExposureStack {
    let images = FIXED_EXPOSURES.iter().map(|&dt| expose(map, dt, crf)).collect();
    ExposureStack::new(images, (0..STACK_LEN).collect()).expect("fixed exposures are increasing")
}

/// Indices of the five-image window centred on the highest-entropy exposure.
/// Ties go to the shorter exposure; near the ends the window is shifted inward.
pub fn adaptive_window(entropies: &[f64]) -> Result<[usize; STACK_LEN]> {
    if entropies.len() < STACK_LEN {
        return Err(Error::Parameter(format!(
            "adaptive selection needs at least {STACK_LEN} exposures, got {}",
            entropies.len()
        )));
    }
    let mut k = 0;
    for (i, &e) in entropies.iter().enumerate() {
        if e > entropies[k] {
            k = i;
        }
    }
    let start = k.saturating_sub(2).min(entropies.len() - STACK_LEN);
    Ok(std::array::from_fn(|i| start + i))
}

/// Exposes at every ladder step and keeps the window around the entropy peak.
pub fn adaptive_stack(map: &RadianceMap, crf: &Crf, ladder: &ExposureLadder) -> Result<ExposureStack> {
    if ladder.len() < STACK_LEN {
        return Err(Error::Parameter(format!(
            "ladder has {} exposures, need at least {STACK_LEN}",
            ladder.len()
        )));
    }
    let mut shots: Vec<LdrImage> = ladder.times().iter().map(|&dt| expose(map, dt, crf)).collect();
    let entropies: Vec<f64> = shots.iter().map(entropy).collect();
    let window = adaptive_window(&entropies)?;
    let images = shots.drain(window[0]..=window[STACK_LEN - 1]).collect();
    ExposureStack::new(images, window.to_vec())
}
