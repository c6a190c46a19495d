//! `FLD1` binary field files: magic, kind byte, side as u32 LE, then the
//! row-major values as f64 LE.

use std::fs;
use std::path::Path;

use crate::encoding::{FieldKind, FieldMatrix};
use crate::error::{Error, Result};

pub const FIELD_MAGIC: &[u8; 4] = b"FLD1";
const HEADER_LEN: usize = 4 + 1 + 4;

pub fn encode_field(field: &FieldMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * field.values.len());
    out.extend_from_slice(FIELD_MAGIC);
    out.push(field.kind.code());
    out.extend_from_slice(&(field.n as u32).to_le_bytes());
    for v in &field.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_field(bytes: &[u8]) -> Result<FieldMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Format(format!("field file truncated: {} bytes", bytes.len())));
    }
    if &bytes[..4] != FIELD_MAGIC {
        return Err(Error::Format("not a field file (bad magic)".into()));
    }
    let kind = FieldKind::from_code(bytes[4])
        .ok_or_else(|| Error::Format(format!("unknown field kind {}", bytes[4])))?;
    let n = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let expect = HEADER_LEN + 8 * n * n;
    if bytes.len() != expect {
        return Err(Error::Format(format!(
            "field of side {n} needs {expect} bytes, file has {}",
            bytes.len()
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FieldMatrix::new(kind, n, values)
}

pub fn save_field(field: &FieldMatrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_field(field)).map_err(|e| Error::io(path, e))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<FieldMatrix> {
    let path = path.as_ref();
    decode_field(&fs::read(path).map_err(|e| Error::io(path, e))?)
}
