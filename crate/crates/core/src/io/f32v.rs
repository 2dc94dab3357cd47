//! F32V: a minimal little-endian container for `f32` volumes.
//!
//! ```text
//! offset  size  content
//! 0       4     magic "F32V"
//! 4       1     version 0x01
//! 5       12    depth, height, width as u32 LE
//! 17      4*N   N = depth*height*width f32 LE, (slice, row, column) order
//! ```

use std::path::Path;

use super::{read_bytes, write_atomic};
use crate::error::{Error, Result};
use crate::volume::Volume;

pub const F32V_MAGIC: &[u8; 4] = b"F32V";
pub const F32V_VERSION: u8 = 1;
const HEADER_LEN: usize = 17;

/// Serializes `v`, narrowing values to `f32`.
pub fn encode_f32v(v: &Volume) -> Result<Vec<u8>> {
    let (d, h, w) = v.shape();
    let dims =
        [d, h, w].map(|n| u32::try_from(n).map_err(|_| Error::InvalidArgument(format!("dimension {n} exceeds u32"))));
    let mut out = Vec::with_capacity(HEADER_LEN + 4 * v.len());
    out.extend_from_slice(F32V_MAGIC);
    out.push(F32V_VERSION);
    for dim in dims {
        out.extend_from_slice(&dim?.to_le_bytes());
    }
    for &x in v.data() {
        out.extend_from_slice(&(x as f32).to_le_bytes());
    }
    Ok(out)
}

pub fn decode_f32v(bytes: &[u8]) -> Result<Volume> {
    if bytes.len() < 4 || &bytes[..4] != F32V_MAGIC {
        return Err(Error::BadMagic);
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile {
            expected: HEADER_LEN,
            actual: bytes.len(),
        });
    }
    if bytes[4] != F32V_VERSION {
        return Err(Error::UnsupportedVersion(bytes[4]));
    }
    let dim = |k: usize| u32::from_le_bytes(bytes[5 + 4 * k..9 + 4 * k].try_into().unwrap()) as usize;
    let (d, h, w) = (dim(0), dim(1), dim(2));
    let n = d
        .checked_mul(h)
        .and_then(|x| x.checked_mul(w))
        .ok_or_else(|| Error::InvalidArgument("F32V dimensions overflow".into()))?;
    let expected = n
        .checked_mul(4)
        .and_then(|x| x.checked_add(HEADER_LEN))
        .ok_or_else(|| Error::InvalidArgument("F32V dimensions overflow".into()))?;
    if bytes.len() < expected {
        return Err(Error::TruncatedFile {
            expected,
            actual: bytes.len(),
        });
    }
    let data = bytes[HEADER_LEN..expected]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Volume::new(d, h, w, data)
}

pub fn read_f32v(path: &Path) -> Result<Volume> {
    decode_f32v(&read_bytes(path)?)
}

pub fn write_f32v(v: &Volume, path: &Path) -> Result<()> {
    write_atomic(path, &encode_f32v(v)?)
}
