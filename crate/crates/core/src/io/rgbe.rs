//! Radiance RGBE codec. Reads flat and new-style run-length scanlines,
//! writes flat scanlines.

use crate::error::{Error, Result};
use crate::image::RadianceMap;

/// Values below this encode as the zero pixel.
const ZERO_THRESHOLD: f32 = 1e-32;

/// Shared-exponent pixel `(r, g, b, e)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RgbePixel(pub [u8; 4]);

impl RgbePixel {
    pub fn encode(rgb: [f32; 3]) -> Result<Self> {
        if rgb.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation(format!("non-finite pixel {rgb:?}")));
        }
        let [r, g, b] = rgb.map(|v| v.max(0.0) as f64);
        let m = r.max(g).max(b);
        if m < ZERO_THRESHOLD as f64 {
            return Ok(Self([0; 4]));
        }
        // m in [2^(e-1), 2^e)
        let mut e = m.log2().floor() as i32 + 1;
        while m >= 2f64.powi(e) {
            e += 1;
        }
        while m < 2f64.powi(e - 1) {
            e -= 1;
        }
        if e > 127 {
            return Err(Error::Validation(format!("pixel {rgb:?} exceeds the RGBE range")));
        }
        let scale = 2f64.powi(8 - e);
        let q = |v: f64| (v * scale).floor().min(255.0) as u8;
        Ok(Self([q(r), q(g), q(b), (e + 128) as u8]))
    }

    pub fn decode(self) -> [f32; 3] {
        let [r, g, b, e] = self.0;
        if e == 0 {
            return [0.0; 3];
        }
        let f = 2f64.powi(e as i32 - 128) / 256.0;
        [r, g, b].map(|c| (c as f64 * f) as f32)
    }
}

struct Header {
    width: usize,
    height: usize,
    data_start: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header> {
    let mut pos = 0;
    let next_line = |pos: &mut usize| -> Option<(usize, &[u8])> {
        if *pos >= bytes.len() {
            return None;
        }
        let start = *pos;
        let end = bytes[start..]
            .iter()
            .position(|&b| b == b'\n')
            .map_or(bytes.len(), |i| start + i);
        *pos = (end + 1).min(bytes.len() + 1);
        Some((start, &bytes[start..end]))
    };

    let (_, magic) = next_line(&mut pos).ok_or_else(|| Error::format(0, "empty input"))?;
    if !(magic.starts_with(b"#?RADIANCE") || magic.starts_with(b"#?RGBE")) {
        return Err(Error::format(0, "missing #?RADIANCE magic"));
    }

    let mut format_ok = false;
    loop {
        let (off, line) = next_line(&mut pos)
            .ok_or_else(|| Error::format(bytes.len(), "header not terminated by a blank line"))?;
        if line.is_empty() {
            break;
        }
        if let Some(fmt) = line.strip_prefix(b"FORMAT=") {
            if fmt != b"32-bit_rle_rgbe" {
                return Err(Error::format(
                    off,
                    format!("unsupported FORMAT {}", String::from_utf8_lossy(fmt)),
                ));
            }
            format_ok = true;
        }
    }
    if !format_ok {
        return Err(Error::format(pos.min(bytes.len()), "missing FORMAT=32-bit_rle_rgbe"));
    }

    let (off, res) = next_line(&mut pos).ok_or_else(|| Error::format(bytes.len(), "missing resolution line"))?;
    if pos > bytes.len() {
        // resolution line ran to EOF without a newline
        return Err(Error::Truncated("no scanline data after resolution line".into()));
    }
    let res = std::str::from_utf8(res).map_err(|_| Error::format(off, "resolution line is not ASCII"))?;
    let parts: Vec<&str> = res.split_ascii_whitespace().collect();
    let dims = match parts.as_slice() {
        ["-Y", h, "+X", w] => h.parse::<usize>().ok().zip(w.parse::<usize>().ok()),
        _ => None,
    };
    let (height, width) =
        dims.ok_or_else(|| Error::format(off, format!("expected `-Y <H> +X <W>`, got {res:?}")))?;
    Ok(Header {
        width,
        height,
        data_start: pos,
    })
}

/// Decodes a Radiance `.hdr` byte stream.
pub fn decode_hdr(bytes: &[u8]) -> Result<RadianceMap> {
    let Header {
        width,
        height,
        data_start,
    } = parse_header(bytes)?;
    let mut pos = data_start;
    let mut data = Vec::with_capacity(width * height * 3);
    let mut line = vec![[0u8; 4]; width];

    for y in 0..height {
        let is_rle = (8..=0x7fff).contains(&width)
            && bytes.get(pos..pos + 4).is_some_and(|h| {
                h[0] == 2 && h[1] == 2 && h[2] & 0x80 == 0 && ((h[2] as usize) << 8 | h[3] as usize) == width
            });
        if is_rle {
            pos += 4;
            for comp in 0..4 {
                let mut x = 0;
                while x < width {
                    let count = *bytes
                        .get(pos)
                        .ok_or_else(|| Error::Truncated(format!("scanline {y} ends early")))?
                        as usize;
                    pos += 1;
                    if count > 128 {
                        let run = count - 128;
                        if x + run > width {
                            return Err(Error::Corrupt(format!("run overflows scanline {y}")));
                        }
                        let v = *bytes
                            .get(pos)
                            .ok_or_else(|| Error::Truncated(format!("scanline {y} ends early")))?;
                        pos += 1;
                        for px in &mut line[x..x + run] {
                            px[comp] = v;
                        }
                        x += run;
                    } else {
                        if count == 0 || x + count > width {
                            return Err(Error::Corrupt(format!("bad literal count in scanline {y}")));
                        }
                        let src = bytes
                            .get(pos..pos + count)
                            .ok_or_else(|| Error::Truncated(format!("scanline {y} ends early")))?;
                        for (px, &v) in line[x..x + count].iter_mut().zip(src) {
                            px[comp] = v;
                        }
                        pos += count;
                        x += count;
                    }
                }
            }
        } else {
            let src = bytes
                .get(pos..pos + width * 4)
                .ok_or_else(|| Error::Truncated(format!("scanline {y} ends early")))?;
            for (px, chunk) in line.iter_mut().zip(src.chunks_exact(4)) {
                px.copy_from_slice(chunk);
            }
            pos += width * 4;
        }
        data.extend(line.iter().flat_map(|&p| RgbePixel(p).decode()));
    }
    RadianceMap::new(width, height, data)
}

/// Encodes a map as a Radiance file with flat scanlines.
pub fn encode_hdr(map: &RadianceMap) -> Result<Vec<u8>> {
    let header = format!(
        "#?RADIANCE\nFORMAT=32-bit_rle_rgbe\n\n-Y {} +X {}\n",
        map.height(),
        map.width()
    );
    let mut out = Vec::with_capacity(header.len() + map.width() * map.height() * 4);
    out.extend_from_slice(header.as_bytes());
    for p in map.pixels() {
        out.extend_from_slice(&RgbePixel::encode(p)?.0);
    }
    Ok(out)
}
