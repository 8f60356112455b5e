use crate::error::{Error, Result};
use crate::image::{reflect_index, Plane};

/// Spatial and range standard deviations for [`bilateral_filter`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BilateralParams {
    pub sigma_s: f64,
    pub sigma_r: f64,
}

impl Default for BilateralParams {
    fn default() -> Self {
        Self {
            sigma_s: 8.0,
            sigma_r: 10.0,
        }
    }
}

fn check_sigma(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::Parameter(format!("{name} must be > 0, got {v}")))
    }
}

fn spatial_kernel(sigma_s: f64) -> (isize, Vec<f64>) {
    let radius = (3.0 * sigma_s).ceil() as isize;
    let side = (2 * radius + 1) as usize;
    let mut k = Vec::with_capacity(side * side);
    for dy in -radius..=radius {
        for dx in -radius..=radius {
            let d2 = (dx * dx + dy * dy) as f64;
            k.push((-d2 / (2.0 * sigma_s * sigma_s)).exp());
        }
    }
    (radius, k)
}

/// Brute-force bilateral filter over a square window of radius `ceil(3 sigma_s)`,
/// with reflect padding at the borders.
pub fn bilateral_filter(plane: &Plane, sigma_s: f64, sigma_r: f64) -> Result<Plane> {
    check_sigma("sigma_s", sigma_s)?;
    check_sigma("sigma_r", sigma_r)?;
    let (radius, spatial) = spatial_kernel(sigma_s);
    let inv_2r2 = 1.0 / (2.0 * sigma_r * sigma_r);
    let (w, h) = (plane.width, plane.height);
    let xs: Vec<Vec<usize>> = (0..w)
        .map(|x| (-radius..=radius).map(|d| reflect_index(x as isize + d, w)).collect())
        .collect();
    let ys: Vec<Vec<usize>> = (0..h)
        .map(|y| (-radius..=radius).map(|d| reflect_index(y as isize + d, h)).collect())
        .collect();

    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            let center = plane.get(x, y);
            let mut acc = 0.0;
            let mut norm = 0.0;
            let mut k = 0;
            for &sy in &ys[y] {
                let row = &plane.data[sy * w..(sy + 1) * w];
                for &sx in &xs[x] {
                    let v = row[sx];
                    let d = v - center;
                    let wgt = spatial[k] * (-d * d * inv_2r2).exp();
                    acc += wgt * v;
                    norm += wgt;
                    k += 1;
                }
            }
            out.push(acc / norm);
        }
    }
    Ok(Plane {
        width: w,
        height: h,
        data: out,
    })
}

/// Normalized Gaussian blur over the same window and padding as the bilateral filter.
pub fn gaussian_blur(plane: &Plane, sigma_s: f64) -> Result<Plane> {
    check_sigma("sigma_s", sigma_s)?;
    let (radius, spatial) = spatial_kernel(sigma_s);
    let norm: f64 = spatial.iter().sum();
    let (w, h) = (plane.width, plane.height);
    Ok(Plane::from_fn(w, h, |x, y| {
        let mut acc = 0.0;
        let mut k = 0;
        for dy in -radius..=radius {
            let sy = reflect_index(y as isize + dy, h);
            for dx in -radius..=radius {
                let sx = reflect_index(x as isize + dx, w);
                acc += spatial[k] * plane.get(sx, sy);
                k += 1;
            }
        }
        acc / norm
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noisy(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| ((x * 7919 + y * 104729) % 97) as f64 / 9.7)
    }

    #[test]
    fn constant_plane_is_unchanged() {
        let p = Plane::filled(13, 9, 42.0);
        let out = bilateral_filter(&p, 2.0, 5.0).unwrap();
        for v in out.data {
            assert!((v - 42.0).abs() < 1e-12);
        }
    }

    #[test]
    fn huge_range_sigma_is_gaussian_blur() {
        let p = noisy(20, 15);
        let bil = bilateral_filter(&p, 1.5, 1e6).unwrap();
        // Independent direct convolution.
        let r = (3.0f64 * 1.5).ceil() as isize;
        for y in 0..15 {
            for x in 0..20 {
                let (mut acc, mut norm) = (0.0, 0.0);
                for dy in -r..=r {
                    for dx in -r..=r {
                        let g = (-((dx * dx + dy * dy) as f64) / (2.0 * 1.5 * 1.5)).exp();
                        acc += g * p.get(reflect_index(x as isize + dx, 20), reflect_index(y as isize + dy, 15));
                        norm += g;
                    }
                }
                assert!((bil.get(x, y) - acc / norm).abs() < 1e-4);
            }
        }
        let blur = gaussian_blur(&p, 1.5).unwrap();
        for (a, b) in bil.data.iter().zip(&blur.data) {
            assert!((a - b).abs() < 1e-4);
        }
    }

    #[test]
    fn step_edge_is_preserved() {
        let (sigma_s, sigma_r) = (2.0, 1.0);
        let height = 10.0 * sigma_r;
        let p = Plane::from_fn(40, 8, |x, _| if x < 20 { 0.0 } else { height });
        let out = bilateral_filter(&p, sigma_s, sigma_r).unwrap();
        let d = (2.0 * sigma_s) as usize;
        for y in 0..8 {
            assert!(out.get(20 - d, y) < 0.05 * height);
            assert!(out.get(19 + d, y) > 0.95 * height);
        }
    }

    #[test]
    fn output_stays_within_input_range() {
        let p = noisy(17, 11);
        let (lo, hi) = p.data.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        let out = bilateral_filter(&p, 2.0, 3.0).unwrap();
        assert!(out.data.iter().all(|&v| v >= lo - 1e-12 && v <= hi + 1e-12));
    }

    #[test]
    fn rejects_bad_sigmas() {
        let p = Plane::filled(4, 4, 1.0);
        assert_eq!(bilateral_filter(&p, 0.0, 1.0).unwrap_err().category(), "parameter");
        assert_eq!(bilateral_filter(&p, 1.0, -2.0).unwrap_err().category(), "parameter");
    }
}
