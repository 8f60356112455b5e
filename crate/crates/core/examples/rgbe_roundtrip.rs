//! Writes a synthetic scene as Radiance `.hdr` and PFM, reads both back and
//! reports the round-trip error.
//!
//! ```text
//! cargo run --example rgbe_roundtrip
//! ```

use hdrcnn::io::{read_hdr_file, read_pfm_file, write_hdr_file, write_pfm_file};
use hdrcnn::pipeline::synth_scene;

fn main() -> hdrcnn::Result<()> {
    let dir = tempfile::tempdir().expect("temp dir");
    let scene = synth_scene(160, 120, 42);

    let hdr = dir.path().join("scene.hdr");
    write_hdr_file(&hdr, &scene)?;
    let back = read_hdr_file(&hdr)?;
    let worst = scene
        .pixels()
        .zip(back.pixels())
        .map(|(a, b)| {
            let m = a.iter().cloned().fold(0.0f32, f32::max);
            let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0f32, f32::max);
            if m > 0.0 { err / m } else { 0.0 }
        })
        .fold(0.0f32, f32::max);
    println!("rgbe: {} bytes, worst error {:.4} of the pixel maximum", std::fs::metadata(&hdr).unwrap().len(), worst);

    let pfm = dir.path().join("scene.pfm");
    write_pfm_file(&pfm, &scene)?;
    println!("pfm: lossless = {}", read_pfm_file(&pfm)? == scene);
    Ok(())
}
