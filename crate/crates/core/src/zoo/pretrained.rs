//! Pretrained classifier weights: `PFW1` magic, u16 version, then the model
//! blob in the same layout the fitted-pipeline step states use.

use std::path::Path;

use thiserror::Error;

use super::mlp::MlpModel;
use crate::pipeline::write_atomic;

pub const MAGIC: &[u8; 4] = b"PFW1";
pub const VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum PretrainedError {
    #[error("io error on {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("corrupt pretrained weights: {0}")]
    Corrupt(String),
}

pub fn encode_pretrained(model: &MlpModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&model.to_bytes());
    out
}

pub fn decode_pretrained(bytes: &[u8]) -> Result<MlpModel, PretrainedError> {
    if bytes.len() < 6 || &bytes[..4] != MAGIC {
        return Err(PretrainedError::Corrupt("bad magic".into()));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(PretrainedError::Corrupt(format!("unsupported version {version}")));
    }
    MlpModel::from_bytes(&bytes[6..]).map_err(|e| PretrainedError::Corrupt(e.to_string()))
}

pub fn save_pretrained(model: &MlpModel, path: &Path) -> Result<(), PretrainedError> {
    write_atomic(path, &encode_pretrained(model))
        .map_err(|source| PretrainedError::Io { path: path.display().to_string(), source })
}

pub fn load_pretrained(path: &Path) -> Result<MlpModel, PretrainedError> {
    let bytes =
        std::fs::read(path).map_err(|source| PretrainedError::Io { path: path.display().to_string(), source })?;
    decode_pretrained(&bytes)
}
