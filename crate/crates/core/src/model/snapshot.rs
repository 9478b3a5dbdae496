//! Binary parameter snapshots.
//!
//! Layout: the 8-byte magic `CLCRSNAP`, a little-endian `u32` header length,
//! a JSON header, then every tensor as row-major little-endian `f64` in the
//! order embed, W1, b1, W2, b2.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncoderKind, ModelDims, ParameterSet};
use crate::{Error, Result};

const MAGIC: &[u8; 8] = b"CLCRSNAP";
pub const SNAPSHOT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotHeader {
    pub version: u32,
    pub dims: ModelDims,
    pub encoder: EncoderKind,
    pub seed: u64,
    /// Hex digest of the effective training configuration.
    pub config_hash: String,
}

pub fn encode_snapshot(header: &SnapshotHeader, params: &ParameterSet) -> Result<Vec<u8>> {
    if header.dims != params.dims {
        return Err(Error::Shape("snapshot header dims differ from parameters".into()));
    }
    let head = serde_json::to_vec(header)?;
    let n_values: usize = params.tensors().iter().map(|t| t.len()).sum();
    let mut out = Vec::with_capacity(12 + head.len() + 8 * n_values);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(head.len() as u32).to_le_bytes());
    out.extend_from_slice(&head);
    for tensor in params.tensors() {
        for v in tensor {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<(SnapshotHeader, ParameterSet)> {
    let bad = |msg: &str| Error::ArtifactMismatch(format!("snapshot: {msg}"));
    if bytes.len() < 12 || &bytes[..8] != MAGIC {
        return Err(bad("bad magic"));
    }
    let head_len = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let body_start = 12 + head_len;
    if bytes.len() < body_start {
        return Err(bad("truncated header"));
    }
    let header: SnapshotHeader =
        serde_json::from_slice(&bytes[12..body_start]).map_err(|e| bad(&format!("header: {e}")))?;
    if header.version != SNAPSHOT_VERSION {
        return Err(bad(&format!("unsupported version {}", header.version)));
    }
    let mut params = ParameterSet::zeros(header.dims);
    let n_values: usize = params.tensors().iter().map(|t| t.len()).sum();
    if bytes.len() != body_start + 8 * n_values {
        return Err(bad("tensor payload size does not match header dims"));
    }
    let mut chunks = bytes[body_start..].chunks_exact(8);
    for tensor in params.tensors_mut() {
        for v in tensor.iter_mut() {
            *v = f64::from_le_bytes(chunks.next().unwrap().try_into().unwrap());
        }
    }
    Ok((header, params))
}

pub fn save_snapshot(path: &Path, header: &SnapshotHeader, params: &ParameterSet) -> Result<()> {
    let bytes = encode_snapshot(header, params)?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_snapshot(path: &Path) -> Result<(SnapshotHeader, ParameterSet)> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_snapshot(&bytes)
}
