//! Binary container for fitted pipelines.
//!
//! Little-endian layout:
//!
//! | field            | encoding                                  |
//! |------------------|-------------------------------------------|
//! | magic            | `"PFF1"`                                  |
//! | schema version   | `u16`                                     |
//! | fit seed         | `u64`                                     |
//! | description      | `u32` length + canonical JSON bytes       |
//! | step states      | per step: `u32` length + bytes            |
//! | fingerprint      | 32-byte SHA-256 (see [`super::fingerprint`]) |

use std::fs;
use std::io::{self, Write};
use std::path::Path;

use thiserror::Error;

use super::description::PipelineDescription;
use super::exec::{fingerprint, FittedPipeline};

pub const MAGIC: &[u8; 4] = b"PFF1";
pub const ARTIFACT_VERSION: u16 = 1;

#[derive(Debug, Error)]
pub enum ArtifactError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("corrupt artifact: {0}")]
    CorruptArtifact(String),
}

fn corrupt(msg: impl Into<String>) -> ArtifactError {
    ArtifactError::CorruptArtifact(msg.into())
}

pub fn encode_fitted(fitted: &FittedPipeline) -> Vec<u8> {
    let text = fitted.description().to_canonical_json();
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&ARTIFACT_VERSION.to_le_bytes());
    out.extend_from_slice(&fitted.fit_seed().to_le_bytes());
    out.extend_from_slice(&(text.len() as u32).to_le_bytes());
    out.extend_from_slice(text.as_bytes());
    for state in fitted.step_states() {
        out.extend_from_slice(&(state.len() as u32).to_le_bytes());
        out.extend_from_slice(state);
    }
    out.extend_from_slice(fitted.fingerprint());
    out
}

pub(crate) struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    pub(crate) fn new(bytes: &'a [u8]) -> Self {
        Self { bytes, pos: 0 }
    }

    pub(crate) fn take(&mut self, n: usize) -> Option<&'a [u8]> {
        let end = self.pos.checked_add(n)?;
        let out = self.bytes.get(self.pos..end)?;
        self.pos = end;
        Some(out)
    }

    pub(crate) fn u16(&mut self) -> Option<u16> {
        self.take(2).map(|b| u16::from_le_bytes([b[0], b[1]]))
    }

    pub(crate) fn u32(&mut self) -> Option<u32> {
        self.take(4).map(|b| u32::from_le_bytes(b.try_into().expect("4 bytes")))
    }

    pub(crate) fn u64(&mut self) -> Option<u64> {
        self.take(8).map(|b| u64::from_le_bytes(b.try_into().expect("8 bytes")))
    }

    pub(crate) fn remaining(&self) -> usize {
        self.bytes.len() - self.pos
    }
}

pub fn decode_fitted(bytes: &[u8]) -> Result<FittedPipeline, ArtifactError> {
    let mut cur = Cursor::new(bytes);
    match cur.take(4) {
        Some(m) if m == MAGIC => {}
        _ => return Err(corrupt("missing PFF1 magic; not a fitted pipeline artifact")),
    }
    let version = cur.u16().ok_or_else(|| corrupt("truncated header"))?;
    if version != ARTIFACT_VERSION {
        return Err(corrupt(format!("unsupported artifact version {version}")));
    }
    let fit_seed = cur.u64().ok_or_else(|| corrupt("truncated header"))?;
    let text_len = cur.u32().ok_or_else(|| corrupt("truncated header"))? as usize;
    let text = cur.take(text_len).ok_or_else(|| corrupt("truncated description"))?;
    let text = std::str::from_utf8(text).map_err(|_| corrupt("description is not UTF-8"))?;
    let description =
        PipelineDescription::from_json(text).map_err(|e| corrupt(format!("description: {e}")))?;
    let mut states = Vec::with_capacity(description.steps.len());
    for i in 0..description.steps.len() {
        let len = cur.u32().ok_or_else(|| corrupt(format!("truncated state {i}")))? as usize;
        let blob = cur.take(len).ok_or_else(|| corrupt(format!("truncated state {i}")))?;
        states.push(blob.to_vec());
    }
    let stored = cur.take(32).ok_or_else(|| corrupt("truncated fingerprint"))?;
    if cur.remaining() != 0 {
        return Err(corrupt(format!("{} trailing bytes", cur.remaining())));
    }
    let computed = fingerprint(text, &states, fit_seed);
    if stored != computed {
        return Err(corrupt("fingerprint mismatch"));
    }
    let fitted = FittedPipeline::new(description, states, fit_seed);
    if fitted.fingerprint()[..] != computed[..] {
        return Err(corrupt("description is not in canonical form"));
    }
    Ok(fitted)
}

/// Writes atomically: a temporary sibling file is renamed into place.
pub fn save_fitted(fitted: &FittedPipeline, path: &Path) -> Result<(), ArtifactError> {
    write_atomic(path, &encode_fitted(fitted))?;
    Ok(())
}

pub fn load_fitted(path: &Path) -> Result<FittedPipeline, ArtifactError> {
    decode_fitted(&fs::read(path)?)
}

/// Writes to a sibling temp file, syncs, then renames over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> io::Result<()> {
    let file_name = path
        .file_name()
        .ok_or_else(|| io::Error::new(io::ErrorKind::InvalidInput, "path has no file name"))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(file_name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path)
}
