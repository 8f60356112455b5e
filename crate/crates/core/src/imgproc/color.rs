use crate::image::{Plane, RadianceMap};

/// Rec. 709 / sRGB luminance weights.
pub const LUMA_WEIGHTS: [f64; 3] = [0.2126, 0.7152, 0.0722];

/// CIE XYZ tristimulus value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Xyz {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const D65: Xyz = Xyz {
    x: 0.95047,
    y: 1.0,
    z: 1.08883,
};

const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

const XYZ_TO_RGB: [[f64; 3]; 3] = [
    [3.2404542, -1.5371385, -0.4985314],
    [-0.9692660, 1.8760108, 0.0415560],
    [0.0556434, -0.2040259, 1.0572252],
];

const LAB_EPSILON: f64 = 216.0 / 24389.0;
const LAB_KAPPA: f64 = 24389.0 / 27.0;

pub fn srgb_decode(code: u8) -> f64 {
    let c = code as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

/// Linear value to 8-bit sRGB, clamping to `[0,1]` and rounding half up.
pub fn srgb_encode(linear: f64) -> u8 {
    let l = if linear.is_nan() { 0.0 } else { linear.clamp(0.0, 1.0) };
    let c = if l <= 0.0031308 {
        12.92 * l
    } else {
        1.055 * l.powf(1.0 / 2.4) - 0.055
    };
    (c * 255.0 + 0.5).floor().clamp(0.0, 255.0) as u8
}

pub fn luminance(map: &RadianceMap) -> Plane {
    let data = map
        .pixels()
        .map(|[r, g, b]| LUMA_WEIGHTS[0] * r as f64 + LUMA_WEIGHTS[1] * g as f64 + LUMA_WEIGHTS[2] * b as f64)
        .collect();
    Plane {
        width: map.width(),
        height: map.height(),
        data,
    }
}

/// CIE L*a*b* planes. `clamped` counts negative input samples that were set to 0.
#[derive(Debug, Clone, PartialEq)]
pub struct LabImage {
    pub width: usize,
    pub height: usize,
    pub l: Vec<f32>,
    pub a: Vec<f32>,
    pub b: Vec<f32>,
    pub white: Xyz,
    pub clamped: usize,
}

impl LabImage {
    pub fn l_plane(&self) -> Plane {
        self.plane(&self.l)
    }

    pub fn a_plane(&self) -> Plane {
        self.plane(&self.a)
    }

    pub fn b_plane(&self) -> Plane {
        self.plane(&self.b)
    }

    fn plane(&self, v: &[f32]) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: v.iter().map(|&x| x as f64).collect(),
        }
    }

    /// Builds an image from three planes of the same size.
    pub fn from_planes(l: &Plane, a: &Plane, b: &Plane, white: Xyz) -> crate::Result<Self> {
        if !l.same_size(a) || !l.same_size(b) {
            return Err(crate::Error::Shape("Lab planes differ in size".into()));
        }
        let f = |p: &Plane| p.data.iter().map(|&v| v as f32).collect();
        Ok(Self {
            width: l.width,
            height: l.height,
            l: f(l),
            a: f(a),
            b: f(b),
            white,
            clamped: 0,
        })
    }
}

fn lab_f(t: f64) -> f64 {
    if t > LAB_EPSILON {
        t.cbrt()
    } else {
        (LAB_KAPPA * t + 16.0) / 116.0
    }
}

fn lab_f_inv(f: f64) -> f64 {
    let f3 = f * f * f;
    if f3 > LAB_EPSILON {
        f3
    } else {
        (116.0 * f - 16.0) / LAB_KAPPA
    }
}

fn mul3(m: &[[f64; 3]; 3], v: [f64; 3]) -> [f64; 3] {
    m.map(|row| row[0] * v[0] + row[1] * v[1] + row[2] * v[2])
}

pub(crate) fn pixel_to_lab(rgb: [f64; 3], white: Xyz) -> [f64; 3] {
    let [x, y, z] = mul3(&RGB_TO_XYZ, rgb);
    let fx = lab_f(x / white.x);
    let fy = lab_f(y / white.y);
    let fz = lab_f(z / white.z);
    [116.0 * fy - 16.0, 500.0 * (fx - fy), 200.0 * (fy - fz)]
}

pub(crate) fn lab_to_pixel(lab: [f64; 3], white: Xyz) -> [f64; 3] {
    let fy = (lab[0] + 16.0) / 116.0;
    let fx = fy + lab[1] / 500.0;
    let fz = fy - lab[2] / 200.0;
    let xyz = [white.x * lab_f_inv(fx), white.y * lab_f_inv(fy), white.z * lab_f_inv(fz)];
    mul3(&XYZ_TO_RGB, xyz)
}

/// Linear RGB (white at luminance 1) to L*a*b*.
pub fn rgb_to_lab(map: &RadianceMap, white: Xyz) -> LabImage {
    let n = map.width() * map.height();
    let mut out = LabImage {
        width: map.width(),
        height: map.height(),
        l: Vec::with_capacity(n),
        a: Vec::with_capacity(n),
        b: Vec::with_capacity(n),
        white,
        clamped: 0,
    };
    for px in map.pixels() {
        let rgb = px.map(|v| {
            if v < 0.0 {
                out.clamped += 1;
                0.0
            } else {
                v as f64
            }
        });
        let [l, a, b] = pixel_to_lab(rgb, white);
        out.l.push(l as f32);
        out.a.push(a as f32);
        out.b.push(b as f32);
    }
    if out.clamped > 0 {
        log::warn!("rgb_to_lab clamped {} negative samples", out.clamped);
    }
    out
}

/// Inverse of [`rgb_to_lab`]. Out-of-gamut negatives are clamped to 0.
pub fn lab_to_rgb(lab: &LabImage) -> RadianceMap {
    let mut data = Vec::with_capacity(lab.l.len() * 3);
    for i in 0..lab.l.len() {
        let rgb = lab_to_pixel([lab.l[i] as f64, lab.a[i] as f64, lab.b[i] as f64], lab.white);
        data.extend(rgb.map(|v| v.max(0.0) as f32));
    }
    RadianceMap::new(lab.width, lab.height, data).expect("lab_to_rgb produces a valid map")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn srgb_endpoints() {
        assert_eq!(srgb_decode(0), 0.0);
        assert_eq!(srgb_decode(255), 1.0);
        assert_eq!(srgb_encode(0.0), 0);
        assert_eq!(srgb_encode(1.0), 255);
        assert_eq!(srgb_encode(7.0), 255);
        assert_eq!(srgb_encode(-1.0), 0);
    }

    #[test]
    fn srgb_round_trips_every_code() {
        for z in 0..=255u8 {
            assert_eq!(srgb_encode(srgb_decode(z)), z, "code {z}");
        }
    }

    #[test]
    fn srgb_knee_is_continuous() {
        let knee = 0.04045;
        let linear = knee / 12.92;
        let power = ((knee + 0.055) / 1.055f64).powf(2.4);
        assert!((linear - power).abs() < 1e-6);
        // code 10 ~ 0.0392 sits just under the knee, code 11 just above
        let below = srgb_decode(10);
        let above = srgb_decode(11);
        assert!((below - 10.0 / 255.0 / 12.92).abs() < 1e-12);
        assert!(above > below);
    }

    #[test]
    fn luminance_definition() {
        let m = RadianceMap::new(3, 1, vec![1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 2.0, 4.0, 8.0]).unwrap();
        let y = luminance(&m);
        assert!((y.data[0] - 1.0).abs() < 1e-12);
        assert!((y.data[1] - 0.2126).abs() < 1e-12);
        let y3 = luminance(&m.scaled(3.0));
        for (a, b) in y3.data.iter().zip(&y.data) {
            assert!((a - 3.0 * b).abs() < 1e-5 * b.max(1.0));
        }
    }

    #[test]
    fn white_and_black() {
        let m = RadianceMap::new(2, 1, vec![1.0, 1.0, 1.0, 0.0, 0.0, 0.0]).unwrap();
        let lab = rgb_to_lab(&m, D65);
        assert!((lab.l[0] - 100.0).abs() < 1e-3);
        assert!(lab.a[0].abs() < 1e-3 && lab.b[0].abs() < 1e-3);
        assert_eq!(lab.l[1], 0.0);
    }

    proptest! {
        #[test]
        fn lab_round_trip(r in 0.0f32..=1.0, g in 0.0f32..=1.0, b in 0.0f32..=1.0) {
            let m = RadianceMap::new(1, 1, vec![r, g, b]).unwrap();
            let back = lab_to_rgb(&rgb_to_lab(&m, D65));
            for (x, y) in back.data().iter().zip(m.data()) {
                prop_assert!((x - y).abs() < 1e-3);
            }
        }
    }
}
