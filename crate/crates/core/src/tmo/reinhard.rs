use super::{rescale_luminance, ToneMap};
use crate::image::RadianceMap;
use crate::imgproc::luminance;

const GEOMEAN_GUARD: f64 = 1e-6;

/// Global photographic operator.
///
/// `Ls = key * L / geomean(L)`, `Ld = Ls (1 + Ls / white^2) / (1 + Ls)`.
/// `white = None` uses the largest scaled luminance; `f64::INFINITY` gives
/// the plain `Ls / (1 + Ls)` curve.
pub fn reinhard_global(map: &RadianceMap, key: f64, white: Option<f64>) -> ToneMap {
    let l = luminance(map);
    let n = l.data.len().max(1) as f64;
    let log_mean = l.data.iter().map(|&v| (v + GEOMEAN_GUARD).ln()).sum::<f64>() / n;
    let geomean = log_mean.exp();
    let scaled: Vec<f64> = l.data.iter().map(|&v| key * v / geomean).collect();
    let white = white.unwrap_or_else(|| scaled.iter().cloned().fold(0.0, f64::max));
    let inv_w2 = if white > 0.0 && white.is_finite() { 1.0 / (white * white) } else { 0.0 };
    let ld: Vec<f64> = scaled.iter().map(|&s| s * (1.0 + s * inv_w2) / (1.0 + s)).collect();
    rescale_luminance(map, &l, &ld)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_scaled_luminance_maps_to_half() {
        // a constant map has geomean ~= L, so key 1 gives Ls ~= 1
        let m = RadianceMap::from_fn(4, 4, |_, _| [2.0, 2.0, 2.0]);
        let tm = reinhard_global(&m, 1.0, Some(f64::INFINITY));
        for v in tm.data() {
            assert!((v - 0.5).abs() < 1e-5, "{v}");
        }
    }

    #[test]
    fn black_stays_black() {
        let tm = reinhard_global(&RadianceMap::zeros(3, 2), 0.18, None);
        assert!(tm.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_is_clipped_and_monotone() {
        let m = RadianceMap::from_fn(32, 1, |x, _| {
            let v = 0.001 * 1.5f32.powi(x as i32);
            [v, v * 0.3, v * 2.0]
        });
        let tm = reinhard_global(&m, 0.18, None);
        assert!(tm.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        let y = tm.luminance();
        assert!(y.data.windows(2).all(|w| w[1] >= w[0] - 1e-7));
    }
}
