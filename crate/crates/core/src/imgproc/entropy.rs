use crate::image::LdrImage;

/// 256-bin intensity histogram.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Histogram {
    pub bins: [u64; 256],
    pub total: u64,
}

impl Histogram {
    pub fn from_codes(codes: impl IntoIterator<Item = u8>) -> Self {
        let mut bins = [0u64; 256];
        let mut total = 0;
        for c in codes {
            bins[c as usize] += 1;
            total += 1;
        }
        Self { bins, total }
    }

    /// Shannon entropy in bits of the normalized histogram.
    pub fn entropy_bits(&self) -> f64 {
        if self.total == 0 {
            return 0.0;
        }
        let n = self.total as f64;
        self.bins.iter().filter(|&&c| c > 0).fold(0.0, |acc, &c| {
            let p = c as f64 / n;
            acc - p * p.log2()
        })
    }
}

/// Integer luma `round(0.2126 R + 0.7152 G + 0.0722 B)`, half rounded up.
pub fn luma_code(rgb: [u8; 3]) -> u8 {
    let y = 0.2126 * rgb[0] as f64 + 0.7152 * rgb[1] as f64 + 0.0722 * rgb[2] as f64;
    (y + 0.5).floor().min(255.0) as u8
}

pub fn entropy(img: &LdrImage) -> f64 {
    let codes = img.data().chunks_exact(3).map(|p| luma_code([p[0], p[1], p[2]]));
    Histogram::from_codes(codes).entropy_bits()
}
