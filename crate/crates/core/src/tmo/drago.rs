use super::{rescale_luminance, ToneMap};
use crate::image::RadianceMap;
use crate::imgproc::luminance;

/// Adaptive logarithmic mapping:
/// `Ld = log(1+L) / (log10(1+Lmax) * log(2 + 8 (L/Lmax)^(ln b / ln 0.5)))`.
///
/// `l_max = None` uses the map's peak luminance; the peak then maps to 1.
pub fn drago(map: &RadianceMap, bias: f64, l_max: Option<f64>) -> ToneMap {
    let l = luminance(map);
    let l_max = l_max.unwrap_or_else(|| l.data.iter().cloned().fold(0.0, f64::max));
    if !(l_max > 0.0) {
        return ToneMap::from_clipped(map.width(), map.height(), vec![0.0; map.data().len()])
            .expect("sizes agree");
    }
    let exponent = bias.ln() / 0.5f64.ln();
    let norm = (1.0 + l_max).log10();
    let ld: Vec<f64> = l
        .data
        .iter()
        .map(|&v| (1.0 + v).ln() / (norm * (2.0 + 8.0 * (v / l_max).powf(exponent)).ln()))
        .collect();
    rescale_luminance(map, &l, &ld)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp() -> RadianceMap {
        RadianceMap::from_fn(40, 1, |x, _| {
            let v = 0.002 * 1.4f32.powi(x as i32);
            [v, v, v]
        })
    }

    #[test]
    fn peak_maps_to_one() {
        let m = ramp();
        let tm = drago(&m, 0.85, None);
        let last = tm.data()[tm.data().len() - 1];
        assert!((last - 1.0).abs() < 1e-5 && last <= 1.0, "{last}");
    }

    #[test]
    fn unit_bias_has_constant_log10_denominator() {
        let m = ramp();
        let l = luminance(&m);
        let l_max = l.data.iter().cloned().fold(0.0, f64::max);
        let tm = drago(&m, 1.0, None);
        for (i, &v) in l.data.iter().enumerate() {
            let want = (1.0 + v).ln() / ((1.0 + l_max).log10() * 10f64.ln());
            assert!((tm.data()[i * 3] as f64 - want.min(1.0)).abs() < 1e-6);
        }
    }

    #[test]
    fn monotone_and_bounded() {
        for bias in [0.5, 0.7, 0.85, 1.0] {
            let tm = drago(&ramp(), bias, None);
            let y = tm.luminance();
            assert!(y.data.windows(2).all(|w| w[1] >= w[0] - 1e-7), "bias {bias}");
            assert!(tm.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        }
    }

    #[test]
    fn black_map() {
        assert!(drago(&RadianceMap::zeros(2, 2), 0.85, None).data().iter().all(|&v| v == 0.0));
    }
}
