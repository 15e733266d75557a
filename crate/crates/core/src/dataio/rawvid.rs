//! `rawvid`: uncompressed little-endian video container.
//!
//! Layout: `"RVID"`, version `u8 = 1`, width `u16`, height `u16`,
//! channels `u8`, frame_count `u32`, then `frame_count * height * width *
//! channels` sample bytes.

use std::fs;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::frames::RawFrames;

pub const MAGIC: &[u8; 4] = b"RVID";
pub const VERSION: u8 = 1;
pub const HEADER_LEN: usize = 14;

#[derive(Debug, Error)]
pub enum RawVidError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic {0:?}, expected \"RVID\"")]
    BadMagic([u8; 4]),
    #[error("unsupported rawvid version {0}")]
    UnsupportedVersion(u8),
    #[error("unsupported channel count {0}")]
    UnsupportedChannels(u8),
    #[error("header is malformed: {0}")]
    BadHeader(String),
    #[error("payload holds {got} bytes, header declares {expected}")]
    TruncatedPayload { expected: usize, got: usize },
    #[error("{extra} trailing bytes after declared payload")]
    TrailingBytes { extra: usize },
    #[error("frame size {height}x{width} does not fit the u16 header fields")]
    TooLarge { height: usize, width: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RawVidHeader {
    pub width: u16,
    pub height: u16,
    pub channels: u8,
    pub frame_count: u32,
}

impl RawVidHeader {
    pub fn payload_len(&self) -> usize {
        self.frame_count as usize * self.height as usize * self.width as usize * self.channels as usize
    }

    fn to_bytes(self) -> [u8; HEADER_LEN] {
        let mut out = [0u8; HEADER_LEN];
        out[..4].copy_from_slice(MAGIC);
        out[4] = VERSION;
        out[5..7].copy_from_slice(&self.width.to_le_bytes());
        out[7..9].copy_from_slice(&self.height.to_le_bytes());
        out[9] = self.channels;
        out[10..14].copy_from_slice(&self.frame_count.to_le_bytes());
        out
    }

    pub fn parse(bytes: &[u8]) -> Result<Self, RawVidError> {
        if bytes.len() < 4 {
            return Err(RawVidError::BadHeader(format!("{} bytes is shorter than the magic", bytes.len())));
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("4 bytes");
        if &magic != MAGIC {
            return Err(RawVidError::BadMagic(magic));
        }
        if bytes.len() < HEADER_LEN {
            return Err(RawVidError::BadHeader(format!("{} bytes is shorter than the header", bytes.len())));
        }
        if bytes[4] != VERSION {
            return Err(RawVidError::UnsupportedVersion(bytes[4]));
        }
        let header = RawVidHeader {
            width: u16::from_le_bytes([bytes[5], bytes[6]]),
            height: u16::from_le_bytes([bytes[7], bytes[8]]),
            channels: bytes[9],
            frame_count: u32::from_le_bytes(bytes[10..14].try_into().expect("4 bytes")),
        };
        if header.channels != 1 && header.channels != 3 {
            return Err(RawVidError::UnsupportedChannels(header.channels));
        }
        if header.frame_count == 0 || header.width == 0 || header.height == 0 {
            return Err(RawVidError::BadHeader(format!(
                "empty clip {}x{}x{}",
                header.frame_count, header.height, header.width
            )));
        }
        Ok(header)
    }
}

pub fn encode_rawvid(frames: &RawFrames) -> Result<Vec<u8>, RawVidError> {
    let (height, width) = (frames.height(), frames.width());
    if height > u16::MAX as usize || width > u16::MAX as usize {
        return Err(RawVidError::TooLarge { height, width });
    }
    let frame_count = u32::try_from(frames.frames())
        .map_err(|_| RawVidError::BadHeader(format!("{} frames overflow u32", frames.frames())))?;
    let header = RawVidHeader {
        width: width as u16,
        height: height as u16,
        channels: frames.channels() as u8,
        frame_count,
    };
    let mut out = Vec::with_capacity(HEADER_LEN + frames.data().len());
    out.extend_from_slice(&header.to_bytes());
    out.extend_from_slice(frames.data());
    Ok(out)
}

pub fn decode_rawvid(bytes: &[u8]) -> Result<RawFrames, RawVidError> {
    let header = RawVidHeader::parse(bytes)?;
    let expected = header.payload_len();
    let got = bytes.len() - HEADER_LEN;
    if got < expected {
        return Err(RawVidError::TruncatedPayload { expected, got });
    }
    if got > expected {
        return Err(RawVidError::TrailingBytes { extra: got - expected });
    }
    let frames = RawFrames::new(
        header.frame_count as usize,
        header.height as usize,
        header.width as usize,
        header.channels as usize,
        bytes[HEADER_LEN..].to_vec(),
    )
    .map_err(|e| RawVidError::BadHeader(e.to_string()))?;
    Ok(frames)
}

pub fn write_rawvid(path: &Path, frames: &RawFrames) -> Result<(), RawVidError> {
    fs::write(path, encode_rawvid(frames)?)?;
    Ok(())
}

pub fn read_rawvid(path: &Path) -> Result<RawFrames, RawVidError> {
    decode_rawvid(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn clip(t: usize, h: usize, w: usize, c: usize) -> RawFrames {
        let data = (0..t * h * w * c).map(|i| (i * 37 % 251) as u8).collect();
        RawFrames::new(t, h, w, c, data).unwrap()
    }

    #[test]
    fn size_of_small_clip() {
        let bytes = encode_rawvid(&clip(2, 4, 4, 1)).unwrap();
        assert_eq!(bytes.len(), 46);
        assert_eq!(&bytes[..4], b"RVID");
        assert_eq!(bytes[4], 1);
        assert_eq!(&bytes[5..7], &4u16.to_le_bytes());
        assert_eq!(&bytes[10..14], &2u32.to_le_bytes());
    }

    #[test]
    fn rejects_bad_magic() {
        let mut bytes = encode_rawvid(&clip(1, 2, 2, 3)).unwrap();
        bytes[..4].copy_from_slice(b"XVID");
        assert!(matches!(decode_rawvid(&bytes), Err(RawVidError::BadMagic(m)) if &m == b"XVID"));
    }

    #[test]
    fn rejects_size_inconsistency() {
        let bytes = encode_rawvid(&clip(10, 3, 3, 1)).unwrap();
        assert!(matches!(
            decode_rawvid(&bytes[..bytes.len() - 9]),
            Err(RawVidError::TruncatedPayload { expected: 90, got: 81 })
        ));
        let mut longer = bytes.clone();
        longer.push(0);
        assert!(matches!(decode_rawvid(&longer), Err(RawVidError::TrailingBytes { extra: 1 })));
        let mut chans = bytes;
        chans[9] = 2;
        assert!(matches!(decode_rawvid(&chans), Err(RawVidError::UnsupportedChannels(2))));
    }

    #[test]
    fn file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.rawvid");
        let c = clip(3, 5, 7, 3);
        write_rawvid(&p, &c).unwrap();
        assert_eq!(read_rawvid(&p).unwrap(), c);
    }
}
