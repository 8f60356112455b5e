//! Binary PPM (`P6`, maxval 255). Exposure lives in a sidecar, not here.

use super::header::HeaderCursor;
use crate::error::{Error, Result};
use crate::image::LdrImage;

/// Reads a `P6` image. The returned image carries exposure 1.0 until a sidecar
/// value is attached.
pub fn read_ppm(bytes: &[u8]) -> Result<LdrImage> {
    let mut cur = HeaderCursor::new(bytes);
    let magic = cur.token("magic")?;
    if magic != "P6" {
        return Err(Error::format(0, format!("expected P6, got {magic:?}")));
    }
    let width: usize = cur.parse("width")?;
    let height: usize = cur.parse("height")?;
    let maxval: u32 = cur.parse("maxval")?;
    if maxval != 255 {
        return Err(Error::Unsupported(format!("PPM maxval {maxval} (only 255 is supported)")));
    }
    let start = cur.end_of_header()?;
    let n = width * height * 3;
    let payload = bytes
        .get(start..start + n)
        .ok_or_else(|| Error::Truncated(format!("PPM payload needs {n} bytes")))?;
    LdrImage::new(width, height, payload.to_vec(), 1.0)
}

pub fn write_ppm(img: &LdrImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend_from_slice(img.data());
    out
}
