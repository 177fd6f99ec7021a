//! Raw `HRT1` tensor container: a 16-byte header (magic, then channels,
//! height and width as little-endian `u32`) followed by little-endian `f32`
//! values in channel-major, row-major order.

use std::fs;
use std::path::Path;

use super::FeatureMap;
use crate::error::{Error, Result};

pub const TENSOR_MAGIC: &[u8; 4] = b"HRT1";
const HEADER_LEN: usize = 16;

pub fn encode_tensor(fm: &FeatureMap) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + fm.values().len() * 4);
    out.extend_from_slice(TENSOR_MAGIC);
    for dim in [fm.channels(), fm.height(), fm.width()] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    for &v in fm.values() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    out
}

pub fn decode_tensor(data: &[u8]) -> Result<FeatureMap> {
    if data.len() < HEADER_LEN {
        return Err(Error::format(
            "header",
            format!("need {HEADER_LEN} bytes, found {}", data.len()),
        ));
    }
    if &data[..4] != TENSOR_MAGIC {
        return Err(Error::format(
            "magic",
            format!("expected HRT1, found {:?}", String::from_utf8_lossy(&data[..4])),
        ));
    }
    let dim = |i: usize| u32::from_le_bytes(data[4 + 4 * i..8 + 4 * i].try_into().unwrap()) as usize;
    let (c, h, w) = (dim(0), dim(1), dim(2));
    if c == 0 || h == 0 || w == 0 {
        return Err(Error::format("dimensions", format!("zero extent in {c}x{h}x{w}")));
    }
    let payload = &data[HEADER_LEN..];
    let expected = c
        .checked_mul(h)
        .and_then(|v| v.checked_mul(w))
        .and_then(|v| v.checked_mul(4))
        .ok_or_else(|| Error::format("dimensions", "overflow"))?;
    if payload.len() != expected {
        return Err(Error::format(
            "payload",
            format!("{c}x{h}x{w} needs {expected} bytes, found {}", payload.len()),
        ));
    }
    let values = payload
        .chunks_exact(4)
        .map(|b| f64::from(f32::from_le_bytes(b.try_into().unwrap())))
        .collect();
    FeatureMap::from_vec(c, h, w, values)
}

pub fn read_tensor(path: impl AsRef<Path>) -> Result<FeatureMap> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_tensor(&data)
}

pub fn write_tensor(fm: &FeatureMap, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_tensor(fm)).map_err(|e| Error::io(path, e))
}
