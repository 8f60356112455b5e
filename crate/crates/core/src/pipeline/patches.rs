use crate::error::{Error, Result};
use crate::image::{reflect_index, Plane};

/// Non-overlapping tiling of a reflect-padded plane.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PatchGrid {
    pub width: usize,
    pub height: usize,
    pub patch: usize,
    pub pad_right: usize,
    pub pad_bottom: usize,
    /// Top-left corners in row-major order.
    pub coords: Vec<(usize, usize)>,
}

impl PatchGrid {
    pub fn new(width: usize, height: usize, patch: usize) -> Result<Self> {
        if patch < 8 {
            return Err(Error::Parameter(format!("patch size {patch} is below 8")));
        }
        if width == 0 || height == 0 {
            return Err(Error::Shape("cannot tile an empty plane".into()));
        }
        let pw = width.div_ceil(patch) * patch;
        let ph = height.div_ceil(patch) * patch;
        let coords = (0..ph).step_by(patch).flat_map(|y| (0..pw).step_by(patch).map(move |x| (x, y))).collect();
        Ok(Self {
            width,
            height,
            patch,
            pad_right: pw - width,
            pad_bottom: ph - height,
            coords,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }
}

/// Cuts same-sized planes into `patch`×`patch` tiles. Each returned patch
/// holds the planes' tiles stacked channel-major.
pub fn extract_patches(planes: &[&Plane], patch: usize) -> Result<(PatchGrid, Vec<Vec<f64>>)> {
    let first = planes.first().ok_or_else(|| Error::Parameter("no planes to patch".into()))?;
    if planes.iter().any(|p| !p.same_size(first)) {
        return Err(Error::Shape("planes to patch differ in size".into()));
    }
    let grid = PatchGrid::new(first.width, first.height, patch)?;
    let patches = grid
        .coords
        .iter()
        .map(|&(x0, y0)| {
            let mut out = Vec::with_capacity(planes.len() * patch * patch);
            for p in planes {
                for y in 0..patch {
                    let sy = reflect_index((y0 + y) as isize, p.height);
                    for x in 0..patch {
                        out.push(p.get(reflect_index((x0 + x) as isize, p.width), sy));
                    }
                }
            }
            out
        })
        .collect();
    Ok((grid, patches))
}

/// Places single-channel patches back on the grid and crops the padding.
pub fn reassemble(grid: &PatchGrid, patches: &[Vec<f64>]) -> Result<Plane> {
    let p = grid.patch;
    if patches.len() != grid.len() || patches.iter().any(|t| t.len() != p * p) {
        return Err(Error::Shape(format!("grid needs {} patches of {p}x{p}", grid.len())));
    }
    let mut out = Plane::filled(grid.width, grid.height, 0.0);
    for (&(x0, y0), t) in grid.coords.iter().zip(patches) {
        for y in 0..p.min(grid.height.saturating_sub(y0)) {
            let w = p.min(grid.width.saturating_sub(x0));
            let row = (y0 + y) * grid.width + x0;
            out.data[row..row + w].copy_from_slice(&t[y * p..y * p + w]);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ramp(w: usize, h: usize) -> Plane {
        Plane::from_fn(w, h, |x, y| (x * 1000 + y) as f64 + 0.25)
    }

    #[test]
    fn exact_tiling() {
        let (g, p) = extract_patches(&[&ramp(128, 128)], 64).unwrap();
        assert_eq!((g.len(), p.len(), g.pad_right, g.pad_bottom), (4, 4, 0, 0));
    }

    #[test]
    fn padded_tiling_crops_back() {
        let src = ramp(100, 70);
        let (g, p) = extract_patches(&[&src], 64).unwrap();
        assert_eq!((g.len(), g.pad_right, g.pad_bottom), (4, 28, 58));
        assert_eq!(reassemble(&g, &p).unwrap(), src);
        // first padded column mirrors column 98
        assert_eq!(p[1][100 - 64], src.get(98, 0));
    }

    #[test]
    fn single_patch_identity() {
        let src = ramp(64, 64);
        let (g, p) = extract_patches(&[&src], 64).unwrap();
        assert_eq!(p[0], src.data);
        assert_eq!(reassemble(&g, &p).unwrap(), src);
    }

    #[test]
    fn multi_plane_layout_and_errors() {
        let (a, b) = (ramp(10, 9), ramp(10, 9).map(|v| -v));
        let (_, p) = extract_patches(&[&a, &b], 8).unwrap();
        assert_eq!(p[0].len(), 2 * 64);
        assert_eq!(p[0][64], -p[0][0]);
        assert_eq!(extract_patches(&[&a], 4).unwrap_err().category(), "parameter");
        assert_eq!(extract_patches(&[&a, &ramp(9, 9)], 8).unwrap_err().category(), "shape");
    }

    proptest! {
        #[test]
        fn round_trip_any_size(w in 1usize..40, h in 1usize..40, patch in 8usize..20) {
            let src = ramp(w, h);
            let (g, p) = extract_patches(&[&src], patch).unwrap();
            prop_assert_eq!(reassemble(&g, &p).unwrap(), src);
        }
    }
}
