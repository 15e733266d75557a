//! Frame extraction: each `<stem>.rawvid` becomes a directory `<stem>/` of
//! numbered PGM/PPM frames.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataio::pnm::{extension_for, read_pnm, write_pnm, PnmError};
use crate::dataio::rawvid::{read_rawvid, RawVidError};
use crate::frames::RawFrames;

pub const SUPPORTED_EXTENSIONS: [&str; 1] = ["rawvid"];

#[derive(Debug, Error)]
pub enum ExtractError {
    #[error("i/o error on {path}: {source}")]
    Io { path: PathBuf, source: io::Error },
    #[error("unsupported video extension {0:?} (supported: rawvid)")]
    UnsupportedExtension(String),
    #[error("corrupt video {path}: {source}")]
    CorruptVideo { path: PathBuf, source: RawVidError },
    #[error("bad frame {path}: {reason}")]
    BadFrame { path: PathBuf, reason: String },
    #[error("no frames found in {0}")]
    NoFrames(PathBuf),
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> ExtractError + '_ {
    move |source| ExtractError::Io { path: path.to_path_buf(), source }
}

pub fn frame_file_name(index: usize, channels: usize) -> String {
    format!("frame_{index:06}.{}", extension_for(channels))
}

/// Video files in `media_dir` with the given extension, sorted by name.
pub fn list_videos(media_dir: &Path, ext: &str) -> Result<Vec<PathBuf>, ExtractError> {
    let mut videos = Vec::new();
    for entry in fs::read_dir(media_dir).map_err(io_err(media_dir))? {
        let path = entry.map_err(io_err(media_dir))?.path();
        if path.is_file() && path.extension().is_some_and(|e| e == ext) {
            videos.push(path);
        }
    }
    videos.sort();
    Ok(videos)
}

/// Writes `frame_000001.<fmt>` .. `frame_{T:06}.<fmt>` for every video and
/// returns the created directories. Re-running rewrites identical files and
/// drops stale frames.
pub fn extract_frames(media_dir: &Path, ext: &str) -> Result<Vec<PathBuf>, ExtractError> {
    if !SUPPORTED_EXTENSIONS.contains(&ext) {
        return Err(ExtractError::UnsupportedExtension(ext.to_string()));
    }
    let mut created = Vec::new();
    for video in list_videos(media_dir, ext)? {
        let clip = read_rawvid(&video).map_err(|source| match source {
            RawVidError::Io(e) => ExtractError::Io { path: video.clone(), source: e },
            other => ExtractError::CorruptVideo { path: video.clone(), source: other },
        })?;
        let stem = video.file_stem().expect("listed files have names");
        let dir = media_dir.join(stem);
        write_frame_dir(&dir, &clip)?;
        created.push(dir);
    }
    Ok(created)
}

pub fn write_frame_dir(dir: &Path, clip: &RawFrames) -> Result<(), ExtractError> {
    fs::create_dir_all(dir).map_err(io_err(dir))?;
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let path = entry.map_err(io_err(dir))?.path();
        let is_frame = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_some_and(|n| n.starts_with("frame_"));
        if is_frame && path.is_file() {
            fs::remove_file(&path).map_err(io_err(&path))?;
        }
    }
    for t in 0..clip.frames() {
        let path = dir.join(frame_file_name(t + 1, clip.channels()));
        write_pnm(&path, clip.height(), clip.width(), clip.channels(), clip.frame(t)).map_err(|e| match e {
            PnmError::Io(source) => ExtractError::Io { path: path.clone(), source },
            PnmError::Malformed(reason) => ExtractError::BadFrame { path: path.clone(), reason },
        })?;
    }
    Ok(())
}

/// Reads consecutive frames `frame_000001`, `frame_000002`, ... until the
/// first gap.
pub fn read_frame_dir(dir: &Path) -> Result<RawFrames, ExtractError> {
    let mut data = Vec::new();
    let mut geometry: Option<(usize, usize, usize)> = None;
    let mut count = 0;
    loop {
        let index = count + 1;
        let path = ["pgm", "ppm"]
            .iter()
            .map(|ext| dir.join(format!("frame_{index:06}.{ext}")))
            .find(|p| p.is_file());
        let Some(path) = path else { break };
        let img = read_pnm(&path).map_err(|e| match e {
            PnmError::Io(source) => ExtractError::Io { path: path.clone(), source },
            PnmError::Malformed(reason) => ExtractError::BadFrame { path: path.clone(), reason },
        })?;
        let g = (img.height, img.width, img.channels);
        match geometry {
            None => geometry = Some(g),
            Some(expected) if expected != g => {
                return Err(ExtractError::BadFrame {
                    path,
                    reason: format!("geometry {g:?} differs from first frame {expected:?}"),
                })
            }
            Some(_) => {}
        }
        data.extend_from_slice(&img.data);
        count += 1;
    }
    let (h, w, c) = geometry.ok_or_else(|| ExtractError::NoFrames(dir.to_path_buf()))?;
    RawFrames::new(count, h, w, c, data).map_err(|e| ExtractError::BadFrame { path: dir.to_path_buf(), reason: e.to_string() })
}
