//! Binary checkpoint format.
//!
//! ```text
//! "HDRNN1"
//! u64 seed, u32 layer count, per layer: u8 kind, u32 in, u32 out, u8 bn, f64 dropout
//! u32 metadata length, metadata JSON (UTF-8)
//! u32 tensor count, per tensor: u32 ndim, u32 dims[ndim], f32 values
//! ```
//! All integers and floats little-endian. Tensors follow
//! [`Network::state_tensors`] order.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::{LayerKind, LayerSpec, Network, NetworkSpec, Real};

pub const MAGIC: &[u8; 6] = b"HDRNN1";

/// Side information stored next to the weights.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct CheckpointMeta {
    pub trained: bool,
    /// What the network predicts, e.g. `ldr2hdr:R` or `tonemap:a`.
    pub role: String,
    /// Target value = `(raw - target_offset) / target_scale`.
    pub target_scale: f64,
    pub target_offset: f64,
    pub input_scale: f64,
    pub input_offset: f64,
    /// Targets were `log1p` of normalized radiance.
    pub log_target: bool,
    pub patch: usize,
    pub epochs: usize,
}

fn kind_code(k: LayerKind) -> u8 {
    match k {
        LayerKind::Conv3x3 => 0,
        LayerKind::Conv1x1 => 1,
        LayerKind::Output1x1 => 2,
    }
}

pub fn save_checkpoint<T: Real>(net: &Network<T>, meta: &CheckpointMeta) -> Result<Vec<u8>> {
    let mut out = MAGIC.to_vec();
    let spec = net.spec();
    out.extend(spec.seed.to_le_bytes());
    out.extend((spec.layers.len() as u32).to_le_bytes());
    for l in &spec.layers {
        out.push(kind_code(l.kind));
        out.extend((l.in_depth as u32).to_le_bytes());
        out.extend((l.out_depth as u32).to_le_bytes());
        out.push(l.batchnorm as u8);
        out.extend(l.dropout_p.to_le_bytes());
    }
    let json = serde_json::to_vec(meta)?;
    out.extend((json.len() as u32).to_le_bytes());
    out.extend(json);
    let tensors = net.state_tensors();
    out.extend((tensors.len() as u32).to_le_bytes());
    for (dims, data) in tensors {
        out.extend((dims.len() as u32).to_le_bytes());
        for d in dims {
            out.extend((d as u32).to_le_bytes());
        }
        for v in data {
            out.extend((v.f64() as f32).to_le_bytes());
        }
    }
    Ok(out)
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let s = self
            .bytes
            .get(self.pos..self.pos + n)
            .ok_or_else(|| Error::Truncated(format!("checkpoint ends at byte {}", self.bytes.len())))?;
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint<T: Real>(bytes: &[u8]) -> Result<(Network<T>, CheckpointMeta)> {
    if bytes.len() < MAGIC.len() || &bytes[..MAGIC.len()] != MAGIC {
        return Err(Error::format(0, "missing HDRNN1 magic"));
    }
    let mut r = Reader {
        bytes,
        pos: MAGIC.len(),
    };
    let seed = r.u64()?;
    let n_layers = r.u32()?;
    let mut layers = Vec::with_capacity(n_layers.min(1024));
    for _ in 0..n_layers {
        let at = r.pos;
        let kind = match r.u8()? {
            0 => LayerKind::Conv3x3,
            1 => LayerKind::Conv1x1,
            2 => LayerKind::Output1x1,
            k => return Err(Error::format(at, format!("unknown layer kind {k}"))),
        };
        layers.push(LayerSpec {
            kind,
            in_depth: r.u32()?,
            out_depth: r.u32()?,
            batchnorm: r.u8()? != 0,
            dropout_p: r.f64()?,
        });
    }
    let meta_len = r.u32()?;
    let meta: CheckpointMeta = serde_json::from_slice(r.take(meta_len)?)?;
    let mut net = Network::<T>::new(NetworkSpec { layers, seed })?;

    let n_tensors = r.u32()?;
    let expected = net.state_tensors();
    if n_tensors != expected.len() {
        return Err(Error::Corrupt(format!(
            "checkpoint holds {n_tensors} tensors, architecture needs {}",
            expected.len()
        )));
    }
    let shapes: Vec<Vec<usize>> = expected.into_iter().map(|(d, _)| d).collect();
    let mut tensors = Vec::with_capacity(n_tensors);
    for (i, want) in shapes.iter().enumerate() {
        let ndim = r.u32()?;
        let dims = (0..ndim).map(|_| r.u32()).collect::<Result<Vec<_>>>()?;
        if &dims != want {
            return Err(Error::Corrupt(format!("tensor {i} has shape {dims:?}, expected {want:?}")));
        }
        let n: usize = dims.iter().product();
        let raw = r.take(n * 4)?;
        tensors.push(
            raw.chunks_exact(4)
                .map(|c| T::of(f32::from_le_bytes(c.try_into().unwrap()) as f64))
                .collect(),
        );
    }
    net.load_state(&tensors)?;
    Ok((net, meta))
}

pub fn save_checkpoint_file<T: Real>(path: impl AsRef<Path>, net: &Network<T>, meta: &CheckpointMeta) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, save_checkpoint(net, meta)?).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint_file<T: Real>(path: impl AsRef<Path>) -> Result<(Network<T>, CheckpointMeta)> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let (net, meta) = load_checkpoint(&bytes)?;
    if !meta.trained {
        log::warn!("{}: checkpoint is marked untrained", path.display());
    }
    Ok((net, meta))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> NetworkSpec {
        NetworkSpec {
            layers: vec![
                LayerSpec::hidden(LayerKind::Conv3x3, 5, 6, 0.4),
                LayerSpec::hidden(LayerKind::Conv1x1, 6, 3, 0.4),
                LayerSpec::output(3),
            ],
            seed: 77,
        }
    }

    #[test]
    fn round_trip_preserves_state_and_meta() {
        let net = Network::<f32>::new(spec()).unwrap();
        let meta = CheckpointMeta {
            trained: true,
            role: "ldr2hdr:G".into(),
            target_scale: 0.01,
            ..Default::default()
        };
        let bytes = save_checkpoint(&net, &meta).unwrap();
        assert_eq!(&bytes[..6], b"HDRNN1");
        let (back, m) = load_checkpoint::<f32>(&bytes).unwrap();
        assert!(back.state_eq(&net));
        assert_eq!(back.spec(), net.spec());
        assert_eq!(m, meta);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        let net = Network::<f32>::new(spec()).unwrap();
        let bytes = save_checkpoint(&net, &CheckpointMeta::default()).unwrap();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(load_checkpoint::<f32>(&bad).unwrap_err().category(), "format");
        assert_eq!(
            load_checkpoint::<f32>(&bytes[..bytes.len() - 3]).unwrap_err().category(),
            "truncated"
        );
    }
}
