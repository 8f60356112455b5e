use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::normalize_hdr;
use crate::image::RadianceMap;

/// Radiance floor relative to the scene maximum.
const FLOOR: f64 = 1e-3;

/// Seeded procedural scene: a tinted linear gradient, Gaussian blobs with
/// exponentially distributed peaks and a checkerboard patch, normalized so the
/// 99th-percentile luminance is 1.
pub fn synth_scene(width: usize, height: usize, seed: u64) -> RadianceMap {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let size = width.max(height) as f64;
    let mut tint = || [rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.5..1.0)];
    let bg_tint = tint();

    let base = rng.random_range(0.02..0.2);
    let slope = rng.random_range(0.0..0.6);
    let theta: f64 = rng.random_range(0.0..std::f64::consts::TAU);
    let peaks = Exp::new(1.0 / 20.0).expect("positive rate");
    let blobs: Vec<(f64, f64, f64, f64, [f64; 3])> = (0..rng.random_range(2..=5))
        .map(|_| {
            let t = [rng.random_range(0.5..1.0), rng.random_range(0.5..1.0), rng.random_range(0.5..1.0)];
            (
                rng.random_range(0.0..width as f64),
                rng.random_range(0.0..height as f64),
                rng.random_range(0.04..0.2) * size,
                1.0 + peaks.sample(&mut rng),
                t,
            )
        })
        .collect();
    let cell = rng.random_range(3..=10usize);
    let (cx0, cy0) = (rng.random_range(0..width.max(2) / 2), rng.random_range(0..height.max(2) / 2));
    let (cw, ch) = (width / 2 + 1, height / 2 + 1);
    let (dark, bright) = (rng.random_range(0.1..0.5), rng.random_range(1.0..4.0));

    let mut raw = vec![[0.0f64; 3]; width * height];
    for y in 0..height {
        for x in 0..width {
            let u = (x as f64 * theta.cos() + y as f64 * theta.sin()) / size;
            let mut v = [0.0; 3];
            let g = base + slope * u.abs();
            for c in 0..3 {
                v[c] = g * bg_tint[c];
            }
            for &(bx, by, s, peak, t) in &blobs {
                let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                let w = peak * (-d2 / (2.0 * s * s)).exp();
                for c in 0..3 {
                    v[c] += w * t[c];
                }
            }
            if (cx0..cx0 + cw).contains(&x) && (cy0..cy0 + ch).contains(&y) {
                let k = if ((x - cx0) / cell + (y - cy0) / cell) % 2 == 0 { dark } else { bright };
                v.iter_mut().for_each(|c| *c *= k);
            }
            raw[y * width + x] = v;
        }
    }
    let max = raw.iter().flatten().cloned().fold(0.0, f64::max);
    let floor = FLOOR * max;
    let map = RadianceMap::from_fn(width, height, |x, y| raw[y * width + x].map(|c| c.max(floor) as f32));
    normalize_hdr(&map).expect("floor keeps the map positive").0
}
