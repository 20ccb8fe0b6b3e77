//! PDSC v1 descriptor files: little-endian `"PDSC"`, u32 version, u32 n,
//! u32 d, `n*d` f32 values, then `n` pairs of u32 `(x, y)`.

use std::path::Path;

use super::{DescriptorSet, Keypoint};
use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"PDSC";
const VERSION: u32 = 1;

pub fn encode_pdsc(set: &DescriptorSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + set.values.len() * 4 + set.len() * 8);
    out.extend_from_slice(MAGIC);
    for v in [VERSION, set.len() as u32, set.d as u32] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for v in &set.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for k in &set.keypoints {
        out.extend_from_slice(&k.x.to_le_bytes());
        out.extend_from_slice(&k.y.to_le_bytes());
    }
    out
}

pub fn decode_pdsc(image_id: &str, bytes: &[u8]) -> Result<DescriptorSet> {
    let bad = |reason: String| Error::Format { what: "PDSC file", reason };
    if bytes.len() < 16 || &bytes[..4] != MAGIC {
        return Err(bad("missing PDSC header".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().expect("4 bytes"));
    let (version, n, d) = (word(4), word(8) as usize, word(12) as usize);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let expected = n.checked_mul(d).and_then(|nd| nd.checked_add(2 * n)).and_then(|w| w.checked_mul(4)).and_then(|b| b.checked_add(16));
    if expected != Some(bytes.len()) {
        return Err(bad(format!("length {} does not match n={n}, d={d}", bytes.len())));
    }
    let values: Vec<f32> = (0..n * d).map(|i| f32::from_le_bytes(bytes[16 + 4 * i..20 + 4 * i].try_into().expect("4 bytes"))).collect();
    let base = 16 + 4 * n * d;
    let keypoints = (0..n).map(|i| Keypoint { x: word(base + 8 * i), y: word(base + 8 * i + 4) }).collect();
    DescriptorSet::new(image_id, d, values, keypoints)
}

pub fn write_pdsc(path: &Path, set: &DescriptorSet) -> Result<()> {
    std::fs::write(path, encode_pdsc(set)).map_err(|e| Error::io(path, e))
}

/// Reads a PDSC file; the image id is the file stem.
pub fn read_pdsc(path: &Path) -> Result<DescriptorSet> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    let id = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    decode_pdsc(&id, &bytes)
}
