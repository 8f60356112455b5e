//! Tone-Mapped image Quality Index.
//!
//! Structural fidelity is computed at a single scale (the first level of the
//! usual five-level pyramid). Naturalness and the combination constants
//! follow the published reference implementation.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use super::ToneMap;
use crate::error::{Error, Result};
use crate::image::{Plane, RadianceMap};
use crate::imgproc::luminance;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TmqiParams {
    pub a: f64,
    pub alpha: f64,
    pub beta: f64,
    /// Spatial frequency (cycles/degree) fed to the contrast sensitivity model.
    pub frequency: f64,
    pub window: usize,
    pub window_sigma: f64,
    pub c1: f64,
    pub c2: f64,
    /// Gaussian prior on mean display luminance (0..255 scale).
    pub mean_mu: f64,
    pub mean_sigma: f64,
    /// Beta prior on mean local contrast, normalized by `contrast_norm`.
    pub contrast_alpha: f64,
    pub contrast_beta: f64,
    pub contrast_norm: f64,
    pub block: usize,
    /// HDR luminance is min-max stretched to `[0, hdr_range]`.
    pub hdr_range: f64,
}

impl Default for TmqiParams {
    fn default() -> Self {
        Self {
            a: 0.8012,
            alpha: 0.3046,
            beta: 0.7088,
            frequency: 16.0,
            window: 11,
            window_sigma: 1.5,
            c1: 0.01,
            c2: 10.0,
            mean_mu: 115.94,
            mean_sigma: 27.99,
            contrast_alpha: 4.4,
            contrast_beta: 10.1,
            contrast_norm: 64.29,
            block: 11,
            hdr_range: 4294967295.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TmqiScore {
    pub s: f64,
    pub n: f64,
    pub q: f64,
}

impl TmqiParams {
    pub fn combine(&self, s: f64, n: f64) -> f64 {
        self.a * s.powf(self.alpha) + (1.0 - self.a) * n.powf(self.beta)
    }

    /// Mean of the psychometric detection curve for local standard deviations.
    fn threshold(&self) -> f64 {
        let f = 0.114 * self.frequency;
        let csf = 100.0 * 2.6 * (0.0192 + f) * (-f.powf(1.1)).exp();
        128.0 / (1.4 * csf)
    }
}

fn gaussian_window(size: usize, sigma: f64) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let mut k: Vec<f64> = (0..size * size)
        .map(|i| {
            let (y, x) = ((i / size) as f64 - c, (i % size) as f64 - c);
            (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k
}

/// Local structural similarity averaged over all fully-contained windows.
/// Both planes must already be on their comparison scales.
pub fn structural_fidelity(hdr: &Plane, ldr: &Plane, params: &TmqiParams) -> Result<f64> {
    if !hdr.same_size(ldr) {
        return Err(Error::Shape("TMQI planes differ in size".into()));
    }
    let size = params.window.min(hdr.width).min(hdr.height).max(1);
    let win = gaussian_window(size, params.window_sigma);
    let u = params.threshold();
    let detect = Normal::new(u, u / 3.0).expect("positive threshold");
    let (c1, c2) = (params.c1, params.c2);

    let mut total = 0.0;
    let mut count = 0usize;
    for y0 in 0..=hdr.height - size {
        for x0 in 0..=hdr.width - size {
            let (mut m1, mut m2, mut s11, mut s22, mut s12) = (0.0, 0.0, 0.0, 0.0, 0.0);
            for wy in 0..size {
                let row = (y0 + wy) * hdr.width + x0;
                for wx in 0..size {
                    let g = win[wy * size + wx];
                    let a = hdr.data[row + wx];
                    let b = ldr.data[row + wx];
                    m1 += g * a;
                    m2 += g * b;
                    s11 += g * a * a;
                    s22 += g * b * b;
                    s12 += g * a * b;
                }
            }
            let sigma1 = (s11 - m1 * m1).max(0.0).sqrt();
            let sigma2 = (s22 - m2 * m2).max(0.0).sqrt();
            let sigma12 = s12 - m1 * m2;
            let p1 = detect.cdf(sigma1);
            let p2 = detect.cdf(sigma2);
            let local = ((2.0 * p1 * p2 + c1) / (p1 * p1 + p2 * p2 + c1)) * ((sigma12 + c2) / (sigma1 * sigma2 + c2));
            total += local;
            count += 1;
        }
    }
    Ok((total / count as f64).clamp(0.0, 1.0))
}

/// Product of the Gaussian (brightness) and Beta (contrast) naturalness
/// priors, each divided by its peak value.
pub fn statistical_naturalness(ldr: &Plane, params: &TmqiParams) -> f64 {
    let n = ldr.data.len().max(1) as f64;
    let mean = ldr.data.iter().sum::<f64>() / n;

    let b = params.block;
    let (bw, bh) = (ldr.width / b, ldr.height / b);
    let block_std = |x0: usize, y0: usize, w: usize, h: usize| {
        let vals = (y0..y0 + h).flat_map(|y| (x0..x0 + w).map(move |x| (x, y)));
        let k = (w * h) as f64;
        let m = vals.clone().map(|(x, y)| ldr.get(x, y)).sum::<f64>() / k;
        let ss = vals.map(|(x, y)| (ldr.get(x, y) - m).powi(2)).sum::<f64>();
        if k > 1.0 {
            (ss / (k - 1.0)).sqrt()
        } else {
            0.0
        }
    };
    let sig = if bw == 0 || bh == 0 {
        block_std(0, 0, ldr.width, ldr.height)
    } else {
        let mut s = 0.0;
        for by in 0..bh {
            for bx in 0..bw {
                s += block_std(bx * b, by * b, b, b);
            }
        }
        s / (bw * bh) as f64
    };

    let pb = (-(mean - params.mean_mu).powi(2) / (2.0 * params.mean_sigma * params.mean_sigma)).exp();
    let (ka, kb) = (params.contrast_alpha, params.contrast_beta);
    let mode = (ka - 1.0) / (ka + kb - 2.0);
    let x = sig / params.contrast_norm;
    let pc = if (0.0..=1.0).contains(&x) {
        (x / mode).powf(ka - 1.0) * ((1.0 - x) / (1.0 - mode)).powf(kb - 1.0)
    } else {
        0.0
    };
    (pb * pc).clamp(0.0, 1.0)
}

/// Scores a tone map against its source radiance map (luminance only).
pub fn tmqi(map: &RadianceMap, tm: &ToneMap, params: &TmqiParams) -> Result<TmqiScore> {
    if map.width() != tm.width() || map.height() != tm.height() {
        return Err(Error::Shape(format!(
            "radiance map is {}x{}, tone map is {}x{}",
            map.width(),
            map.height(),
            tm.width(),
            tm.height()
        )));
    }
    let l = luminance(map);
    let (lo, hi) = l.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
    let stretch = if hi > lo { params.hdr_range / (hi - lo) } else { 0.0 };
    let hdr = l.map(|v| (v - lo) * stretch);
    let ldr = tm.luminance().map(|v| v * 255.0);
    let s = structural_fidelity(&hdr, &ldr, params)?;
    let n = statistical_naturalness(&ldr, params);
    Ok(TmqiScore {
        s,
        n,
        q: params.combine(s, n),
    })
}
