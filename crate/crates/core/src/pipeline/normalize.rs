use crate::error::{Error, Result};
use crate::image::RadianceMap;
use crate::imgproc::luminance;

/// Nearest-rank 99th percentile of `values`.
pub(crate) fn percentile99(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let rank = ((0.99 * v.len() as f64).ceil() as usize).clamp(1, v.len());
    v[rank - 1]
}

/// Divides the map by the 99th percentile of its luminance and returns that
/// scale so the caller can undo it.
pub fn normalize_hdr(map: &RadianceMap) -> Result<(RadianceMap, f64)> {
    if map.data().is_empty() {
        return Err(Error::Validation("cannot normalize an empty map".into()));
    }
    let p99 = percentile99(&luminance(map).data);
    if p99 <= 0.0 || !p99.is_finite() {
        return Err(Error::Validation(format!("99th-percentile luminance is {p99}; map is (nearly) all zero")));
    }
    if p99 == 1.0 {
        return Ok((map.clone(), 1.0));
    }
    Ok((map.scaled((1.0 / p99) as f32), p99))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scene() -> RadianceMap {
        RadianceMap::from_fn(20, 15, |x, y| {
            let v = 0.01 + (x * y) as f32 * 0.03;
            [v, v * 0.5, v * 2.0]
        })
    }

    #[test]
    fn percentile_is_nearest_rank() {
        let v: Vec<f64> = (1..=100).map(f64::from).collect();
        assert_eq!(percentile99(&v), 99.0);
        assert_eq!(percentile99(&[3.0]), 3.0);
    }

    #[test]
    fn normalized_p99_is_one() {
        let (n, s) = normalize_hdr(&scene()).unwrap();
        assert!(s > 0.0);
        assert!((percentile99(&luminance(&n).data) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn already_normalized_is_unchanged() {
        let (n, _) = normalize_hdr(&scene()).unwrap();
        let (again, s) = normalize_hdr(&n).unwrap();
        assert!((s - 1.0).abs() < 1e-6);
        for (a, b) in again.data().iter().zip(n.data()) {
            assert!((a - b).abs() <= 1e-6 * b.max(1.0));
        }
    }

    #[test]
    fn scale_equivariance() {
        let (a, sa) = normalize_hdr(&scene()).unwrap();
        let (b, sb) = normalize_hdr(&scene().scaled(10.0)).unwrap();
        assert!((sb / sa - 10.0).abs() < 1e-5);
        for (x, y) in a.data().iter().zip(b.data()) {
            assert!((x - y).abs() <= 1e-5 * x.max(1.0));
        }
    }

    #[test]
    fn zero_map_is_rejected() {
        assert_eq!(normalize_hdr(&RadianceMap::zeros(4, 4)).unwrap_err().category(), "validation");
    }
}
