//! Image persistence: Radiance RGBE (`.hdr`), PFM and binary PPM, plus the
//! `.exposure` sidecar that carries an LDR image's exposure time.

mod header;
mod pfm;
mod ppm;
mod rgbe;

use std::fs;
use std::path::{Path, PathBuf};

pub use pfm::{read_pfm, write_pfm};
pub use ppm::{read_ppm, write_ppm};
pub use rgbe::{decode_hdr, encode_hdr, RgbePixel};

use crate::error::{Error, Result};
use crate::image::{LdrImage, RadianceMap};

pub fn read_hdr_file(path: impl AsRef<Path>) -> Result<RadianceMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_hdr(&bytes)
}

pub fn write_hdr_file(path: impl AsRef<Path>, map: &RadianceMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_hdr(map)?).map_err(|e| Error::io(path, e))
}

pub fn read_pfm_file(path: impl AsRef<Path>) -> Result<RadianceMap> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    read_pfm(&bytes)
}

pub fn write_pfm_file(path: impl AsRef<Path>, map: &RadianceMap) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_pfm(map)).map_err(|e| Error::io(path, e))
}

/// Reads any supported radiance file, choosing the decoder by extension.
pub fn read_radiance_file(path: impl AsRef<Path>) -> Result<RadianceMap> {
    let path = path.as_ref();
    match path.extension().and_then(|e| e.to_str()) {
        Some("pfm") => read_pfm_file(path),
        _ => read_hdr_file(path),
    }
}

/// Path of the exposure sidecar that belongs to an LDR image file.
pub fn sidecar_path(image_path: impl AsRef<Path>) -> PathBuf {
    image_path.as_ref().with_extension("exposure")
}

pub fn write_exposure_sidecar(image_path: impl AsRef<Path>, exposure: f64) -> Result<()> {
    let path = sidecar_path(image_path);
    fs::write(&path, format!("{exposure}\n")).map_err(|e| Error::io(&path, e))
}

pub fn read_exposure_sidecar(image_path: impl AsRef<Path>) -> Result<f64> {
    let path = sidecar_path(image_path);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let value: f64 = text.trim().parse().map_err(|_| {
        Error::Validation(format!("{}: not a decimal exposure: {:?}", path.display(), text.trim()))
    })?;
    if !(value.is_finite() && value > 0.0) {
        return Err(Error::Validation(format!("{}: exposure must be > 0", path.display())));
    }
    Ok(value)
}

/// Writes `img` as PPM together with its `.exposure` sidecar.
pub fn write_ldr_file(path: impl AsRef<Path>, img: &LdrImage) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_ppm(img)).map_err(|e| Error::io(path, e))?;
    write_exposure_sidecar(path, img.exposure())
}

/// Reads a PPM and attaches the exposure from its sidecar.
pub fn read_ldr_file(path: impl AsRef<Path>) -> Result<LdrImage> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let exposure = read_exposure_sidecar(path)?;
    read_ppm(&bytes)?.with_exposure(exposure)
}
