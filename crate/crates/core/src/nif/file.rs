//! `.nifw` weight files.
//!
//! ```text
//! "NIFW" | version u32 | hidden u32 | layers u32 | fourier_dim u32
//! | colour_matrix u32 | tone_map u32 | parameter count u64
//! | per layer: weights (inputs x outputs, row-major) then biases, f32
//! | CRC-32 of everything before it, u32
//! ```
//! All integers and floats are little-endian.

use std::path::Path;

use super::{ColourMatrix, NifConfig, NifWeights, ToneMap};
use crate::error::{Error, Result};

pub const NIFW_MAGIC: [u8; 4] = *b"NIFW";
pub const NIFW_VERSION: u32 = 1;
const HEADER_BYTES: usize = 4 + 6 * 4 + 8;

pub fn encode_nifw(w: &NifWeights<f32>) -> Vec<u8> {
    let cfg = w.config();
    let mut out = Vec::with_capacity(HEADER_BYTES + 4 * w.params().len() + 4);
    out.extend_from_slice(&NIFW_MAGIC);
    for v in [
        NIFW_VERSION,
        cfg.hidden,
        cfg.layers,
        cfg.fourier_dim,
        cfg.colour_matrix.code(),
        match cfg.tone_map {
            ToneMap::Log1p => 0,
        },
    ] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&(w.params().len() as u64).to_le_bytes());
    for p in w.params() {
        out.extend_from_slice(&p.to_le_bytes());
    }
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

pub fn decode_nifw(bytes: &[u8]) -> Result<NifWeights<f32>> {
    if bytes.len() < HEADER_BYTES + 4 {
        return Err(Error::Format("weight file is too short".into()));
    }
    if bytes[..4] != NIFW_MAGIC {
        return Err(Error::Format("bad weight file magic".into()));
    }
    let (body, trailer) = bytes.split_at(bytes.len() - 4);
    let stored = u32::from_le_bytes(trailer.try_into().unwrap());
    if crc32fast::hash(body) != stored {
        return Err(Error::Format("weight file checksum mismatch".into()));
    }
    let u32_at = |i: usize| u32::from_le_bytes(body[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    let version = u32_at(0);
    if version != NIFW_VERSION {
        return Err(Error::Format(format!("unsupported weight file version {version}")));
    }
    let colour_matrix = ColourMatrix::from_code(u32_at(4))
        .ok_or_else(|| Error::Format(format!("unknown colour matrix code {}", u32_at(4))))?;
    if u32_at(5) != 0 {
        return Err(Error::Format(format!("unknown tone map code {}", u32_at(5))));
    }
    let cfg = NifConfig {
        hidden: u32_at(1),
        layers: u32_at(2),
        fourier_dim: u32_at(3),
        colour_matrix,
        tone_map: ToneMap::Log1p,
    };
    cfg.validate().map_err(|e| Error::Format(format!("weight file config: {e}")))?;
    let count = u64::from_le_bytes(body[28..36].try_into().unwrap());
    if count != cfg.parameter_count() as u64 {
        return Err(Error::Format(format!(
            "weight file holds {count} parameters, {} expects {}",
            cfg.label(),
            cfg.parameter_count()
        )));
    }
    let data = &body[HEADER_BYTES..];
    if data.len() as u64 != 4 * count {
        return Err(Error::Format("weight file length does not match its parameter count".into()));
    }
    let params = data
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    NifWeights::from_params(cfg, params).map_err(|e| Error::Format(e.to_string()))
}

pub fn write_nifw(path: impl AsRef<Path>, w: &NifWeights<f32>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_nifw(w)).map_err(|e| Error::io(path, e))
}

pub fn read_nifw(path: impl AsRef<Path>) -> Result<NifWeights<f32>> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_nifw(&bytes)
}
