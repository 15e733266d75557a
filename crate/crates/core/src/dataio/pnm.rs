//! Binary PGM (`P5`) and PPM (`P6`) frame files, maxval 255.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PnmError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("malformed pnm: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PnmImage {
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    pub data: Vec<u8>,
}

pub fn extension_for(channels: usize) -> &'static str {
    if channels == 1 {
        "pgm"
    } else {
        "ppm"
    }
}

pub fn encode_pnm(height: usize, width: usize, channels: usize, data: &[u8]) -> Vec<u8> {
    let magic = if channels == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(data);
    out
}

pub fn decode_pnm(bytes: &[u8]) -> Result<PnmImage, PnmError> {
    let mut pos = 0;
    let mut next_token = || -> Result<String, PnmError> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(PnmError::Malformed("header ended early".into()));
        }
        Ok(String::from_utf8_lossy(&bytes[start..pos]).into_owned())
    };
    let channels = match next_token()?.as_str() {
        "P5" => 1,
        "P6" => 3,
        other => return Err(PnmError::Malformed(format!("unsupported magic {other:?}"))),
    };
    let mut number = |what: &str| -> Result<usize, PnmError> {
        next_token()?
            .parse()
            .map_err(|_| PnmError::Malformed(format!("bad {what}")))
    };
    let width = number("width")?;
    let height = number("height")?;
    let maxval = number("maxval")?;
    if maxval != 255 {
        return Err(PnmError::Malformed(format!("maxval {maxval} is not 255")));
    }
    // exactly one whitespace byte separates the header from the samples
    let data_start = pos + 1;
    let expected = height * width * channels;
    if bytes.len() < data_start || bytes.len() - data_start != expected {
        return Err(PnmError::Malformed(format!(
            "expected {expected} sample bytes, found {}",
            bytes.len().saturating_sub(data_start)
        )));
    }
    Ok(PnmImage { height, width, channels, data: bytes[data_start..].to_vec() })
}

pub fn write_pnm(path: &Path, height: usize, width: usize, channels: usize, data: &[u8]) -> Result<(), PnmError> {
    fs::write(path, encode_pnm(height, width, channels, data))?;
    Ok(())
}

pub fn read_pnm(path: &Path) -> Result<PnmImage, PnmError> {
    decode_pnm(&fs::read(path)?)
}
