//! Portable float map. Rows are stored bottom-to-top; the sign of the scale
//! field selects endianness (negative = little-endian).

use super::header::HeaderCursor;
use crate::error::{Error, Result};
use crate::image::RadianceMap;

pub fn read_pfm(bytes: &[u8]) -> Result<RadianceMap> {
    let mut cur = HeaderCursor::new(bytes);
    let channels = match cur.token("magic")? {
        "PF" => 3,
        "Pf" => 1,
        other => return Err(Error::format(0, format!("bad PFM magic {other:?}"))),
    };
    let width: usize = cur.parse("width")?;
    let height: usize = cur.parse("height")?;
    let scale_at = cur.pos;
    let scale: f32 = cur.parse("scale")?;
    if scale == 0.0 || !scale.is_finite() {
        return Err(Error::format(scale_at, "scale must be non-zero"));
    }
    let little = scale < 0.0;
    let start = cur.end_of_header()?;

    let n = width * height * channels;
    let payload = bytes
        .get(start..start + n * 4)
        .ok_or_else(|| Error::Truncated(format!("PFM payload needs {} bytes", n * 4)))?;
    let samples: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| {
            let b = [c[0], c[1], c[2], c[3]];
            if little {
                f32::from_le_bytes(b)
            } else {
                f32::from_be_bytes(b)
            }
        })
        .collect();

    let mut data = Vec::with_capacity(width * height * 3);
    for row in (0..height).rev() {
        let line = &samples[row * width * channels..(row + 1) * width * channels];
        if channels == 3 {
            data.extend_from_slice(line);
        } else {
            data.extend(line.iter().flat_map(|&v| [v; 3]));
        }
    }
    RadianceMap::new(width, height, data)
}

/// Writes a little-endian colour PFM with scale `-1.0`.
pub fn write_pfm(map: &RadianceMap) -> Vec<u8> {
    let (w, h) = (map.width(), map.height());
    let mut out = format!("PF\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(w * h * 12);
    for row in (0..h).rev() {
        for v in &map.data()[row * w * 3..(row + 1) * w * 3] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}
