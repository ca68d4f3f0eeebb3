//! Binary containers for datasets and checkpoints.
//!
//! Both share one framing: an 8-byte magic, a little-endian `u32` header
//! length, a JSON header, then little-endian `f32` blocks whose sizes the
//! header declares.

mod checkpoint;
mod dataset;

use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{LabError, Result};

pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, read_checkpoint, write_checkpoint, StoredCheckpoint, CHECKPOINT_MAGIC,
    CHECKPOINT_VERSION,
};
pub use dataset::{decode_dataset, encode_dataset, read_dataset, write_dataset, DATASET_MAGIC, DATASET_VERSION};

pub(crate) fn frame<H: Serialize>(magic: &[u8; 8], header: &H, payload: &[f32]) -> Vec<u8> {
    let header = serde_json::to_vec(header).expect("headers are plain data");
    let mut out = Vec::with_capacity(12 + header.len() + 4 * payload.len());
    out.extend_from_slice(magic);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(&header);
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Splits a container into its typed header and payload, checking magic,
/// version and declared payload length in that order.
pub(crate) fn unframe<H: DeserializeOwned>(
    bytes: &[u8],
    magic: &[u8; 8],
    version: u32,
    payload_len: impl FnOnce(&H) -> usize,
) -> Result<(H, Vec<f32>)> {
    if bytes.len() < 8 || &bytes[..8] != magic {
        let n = bytes.len().min(8);
        return Err(LabError::BadMagic {
            expected: String::from_utf8_lossy(magic).into_owned(),
            found: String::from_utf8_lossy(&bytes[..n]).into_owned(),
        });
    }
    if bytes.len() < 12 {
        return Err(LabError::TruncatedPayload {
            expected: 12,
            found: bytes.len(),
        });
    }
    let hlen = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body = 12 + hlen;
    if bytes.len() < body {
        return Err(LabError::TruncatedPayload {
            expected: body,
            found: bytes.len(),
        });
    }
    let raw: serde_json::Value =
        serde_json::from_slice(&bytes[12..body]).map_err(|e| LabError::Header(e.to_string()))?;
    let found = raw
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| LabError::Header("missing format_version".into()))?;
    if found != u64::from(version) {
        return Err(LabError::VersionMismatch {
            found: found as u32,
            expected: version,
        });
    }
    let header: H = serde_json::from_value(raw).map_err(|e| LabError::Header(e.to_string()))?;
    let expected = body + 4 * payload_len(&header);
    if bytes.len() != expected {
        return Err(LabError::TruncatedPayload {
            expected,
            found: bytes.len(),
        });
    }
    let payload = bytes[body..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, payload))
}

pub(crate) fn read_bytes(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| LabError::io(path, e))
}

pub(crate) fn write_bytes(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| LabError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| LabError::io(path, e))
}
