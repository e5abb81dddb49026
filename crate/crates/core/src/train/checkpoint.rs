//! Checkpoint file.
//!
//! ```text
//! "HBDL" | u32 version | u32 header length | header (UTF-8 JSON)
//! parameter blocks, f32 little-endian, in the order listed in the header
//! u64 checksum: first 8 bytes of SHA-256 over everything above
//! ```
//!
//! The header holds the network configuration and the name and shape of
//! every block.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::dataset::checksum64;
use crate::nn::{NetworkConfig, NetworkParams};
use crate::scalar::Scalar;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"HBDL";
pub const CHECKPOINT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct BlockHeader {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Header {
    network: NetworkConfig,
    blocks: Vec<BlockHeader>,
}

fn io_err(path: &Path, e: impl ToString) -> TrainError {
    TrainError::Io {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

pub fn save_checkpoint<T: Scalar>(params: &NetworkParams<T>, config: &NetworkConfig, path: &Path) -> Result<(), TrainError> {
    params.check(config)?;
    let blocks = params.blocks();
    let header = Header {
        network: config.clone(),
        blocks: blocks
            .iter()
            .map(|b| BlockHeader {
                name: b.name.clone(),
                shape: b.shape.clone(),
            })
            .collect(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| io_err(path, e))?;
    let mut buf = Vec::with_capacity(16 + json.len() + 4 * params.n_trainable() * 2);
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    buf.extend_from_slice(&(json.len() as u32).to_le_bytes());
    buf.extend_from_slice(&json);
    for b in &blocks {
        for v in b.data {
            buf.extend_from_slice(&v.to_f32().unwrap_or(f32::NAN).to_le_bytes());
        }
    }
    let sum = checksum64(&buf);
    buf.extend_from_slice(&sum.to_le_bytes());
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub fn load_checkpoint<T: Scalar>(path: &Path) -> Result<(NetworkParams<T>, NetworkConfig), TrainError> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    let corrupt = |reason: &str| TrainError::CorruptCheckpoint {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    };
    if bytes.len() < 20 || &bytes[..4] != CHECKPOINT_MAGIC {
        return Err(corrupt("not a checkpoint file"));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().expect("4 bytes"));
    if version != CHECKPOINT_VERSION {
        return Err(TrainError::VersionMismatch {
            path: path.to_path_buf(),
            found: version,
            expected: CHECKPOINT_VERSION,
        });
    }
    let (body, tail) = bytes.split_at(bytes.len() - 8);
    if checksum64(body) != u64::from_le_bytes(tail.try_into().expect("8 bytes")) {
        return Err(corrupt("checksum mismatch"));
    }
    let json_len = u32::from_le_bytes(body[8..12].try_into().expect("4 bytes")) as usize;
    let json = body.get(12..12 + json_len).ok_or_else(|| corrupt("truncated header"))?;
    let header: Header = serde_json::from_slice(json).map_err(|e| corrupt(&format!("bad header: {e}")))?;
    header
        .network
        .validate()
        .map_err(|e| corrupt(&format!("bad network configuration: {e}")))?;

    let mut params = NetworkParams::<T>::init(&header.network, &mut crate::rng::Prng::seed_from_u64(0))?;
    let expected = NetworkParams::<T>::expected_shapes(&header.network);
    let names: Vec<String> = params.blocks().into_iter().map(|b| b.name).collect();
    if header.blocks.len() != expected.len() {
        return Err(corrupt("block list does not match the network"));
    }
    for ((h, shape), name) in header.blocks.iter().zip(&expected).zip(&names) {
        if &h.shape != shape || &h.name != name {
            return Err(corrupt(&format!("block {} {:?} where {name} {shape:?} was expected", h.name, h.shape)));
        }
    }
    let mut data = &body[12 + json_len..];
    for block in params.blocks_mut() {
        let need = 4 * block.len();
        if data.len() < need {
            return Err(corrupt("truncated parameter data"));
        }
        for (v, chunk) in block.iter_mut().zip(data[..need].chunks_exact(4)) {
            *v = T::of(f32::from_le_bytes(chunk.try_into().expect("4 bytes")) as f64);
        }
        data = &data[need..];
    }
    if !data.is_empty() {
        return Err(corrupt("trailing bytes after parameter data"));
    }
    params.check(&header.network)?;
    Ok((params, header.network))
}
