//! Synthetic action videos: a bright square drifting in one direction per
//! class over a dark background.
//!
//! Every clip starts near a fixed off-center anchor (upper left), so each
//! direction reaches a different frame edge at a different time. The frame
//! at which the square starts leaving the picture is what separates classes
//! under global per-frame statistics.

use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

use super::rawvid::{write_rawvid, RawVidError};
use super::DatasetBundle;
use crate::frames::RawFrames;
use crate::seed::stream_rng;
use crate::table::{Table, TableError};

/// Direction names in class order, with their per-frame `(dx, dy)`.
pub const DIRECTIONS: [(&str, i64, i64); 8] = [
    ("right", 1, 0),
    ("left", -1, 0),
    ("down", 0, 1),
    ("up", 0, -1),
    ("down_right", 1, 1),
    ("up_left", -1, -1),
    ("down_left", -1, 1),
    ("up_right", 1, -1),
];

const BACKGROUND: f64 = 16.0;
const FOREGROUND: f64 = 224.0;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error(transparent)]
    RawVid(#[from] RawVidError),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSpec {
    pub num_classes: usize,
    pub videos_per_class: usize,
    pub frames: usize,
    pub height: usize,
    pub width: usize,
    pub channels: usize,
    /// Gaussian noise standard deviation in u8 units, added before rounding.
    pub noise_std: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            num_classes: 4,
            videos_per_class: 25,
            frames: 32,
            height: 32,
            width: 32,
            channels: 3,
            noise_std: 8.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        let bad = |m: String| Err(SynthError::InvalidSpec(m));
        if self.num_classes == 0 || self.num_classes > DIRECTIONS.len() {
            return bad(format!("num_classes must be in 1..={}", DIRECTIONS.len()));
        }
        if self.videos_per_class == 0 || self.frames == 0 {
            return bad("videos_per_class and frames must be at least 1".into());
        }
        if self.height < 4 || self.width < 4 || self.height > 4096 || self.width > 4096 {
            return bad(format!("frame size {}x{} outside 4..=4096", self.height, self.width));
        }
        if self.channels != 1 && self.channels != 3 {
            return bad(format!("channels must be 1 or 3, got {}", self.channels));
        }
        if !(self.noise_std.is_finite() && self.noise_std >= 0.0) {
            return bad(format!("noise_std must be finite and >= 0, got {}", self.noise_std));
        }
        Ok(())
    }

    pub fn class_names(&self) -> Vec<&'static str> {
        DIRECTIONS[..self.num_classes.min(DIRECTIONS.len())].iter().map(|d| d.0).collect()
    }
}

pub fn video_name(class: usize, video: usize) -> String {
    format!("c{class}_v{video:03}.rawvid")
}

/// Renders one clip. Pure function of `(spec, class, video)`.
pub fn render_clip(spec: &SyntheticSpec, class: usize, video: usize) -> RawFrames {
    let (_, dx, dy) = DIRECTIONS[class];
    let (h, w, c) = (spec.height, spec.width, spec.channels);
    let side = (w / 4).max(1) as i64;
    let mut rng = stream_rng(spec.seed, (class as u64) << 32 | video as u64);
    let jitter = (w as i64 / 32).max(1);
    let x0 = w as i64 / 32 + rng.random_range(-jitter..=jitter);
    let y0 = h as i64 / 4 + rng.random_range(-jitter..=jitter);
    let noise = Normal::new(0.0, spec.noise_std).expect("validated noise");

    let mut data = Vec::with_capacity(spec.frames * h * w * c);
    for t in 0..spec.frames as i64 {
        let (sx, sy) = (x0 + dx * t, y0 + dy * t);
        for y in 0..h as i64 {
            for x in 0..w as i64 {
                let inside = x >= sx && x < sx + side && y >= sy && y < sy + side;
                let base = if inside { FOREGROUND } else { BACKGROUND };
                for _ in 0..c {
                    let v = if spec.noise_std > 0.0 { base + noise.sample(&mut rng) } else { base };
                    data.push(v.round().clamp(0.0, 255.0) as u8);
                }
            }
        }
    }
    RawFrames::new(spec.frames, h, w, c, data).expect("geometry from validated spec")
}

/// Writes `media/` with one rawvid per clip and `annotations.csv` with
/// columns `d3mIndex,video,label` (label is the direction name).
pub fn generate_synthetic_dataset(spec: &SyntheticSpec, out_dir: &Path) -> Result<DatasetBundle, SynthError> {
    spec.validate()?;
    let media_dir = out_dir.join("media");
    fs::create_dir_all(&media_dir)?;
    let names = spec.class_names();
    let mut rows = Vec::with_capacity(spec.num_classes * spec.videos_per_class);
    for (class, label) in names.iter().enumerate() {
        for video in 0..spec.videos_per_class {
            let name = video_name(class, video);
            write_rawvid(&media_dir.join(&name), &render_clip(spec, class, video))?;
            rows.push(vec![rows.len().to_string(), name, label.to_string()]);
        }
    }
    let columns = ["d3mIndex", "video", "label"].map(String::from).to_vec();
    let table = Table::new(columns, rows, Some(2))?;
    let table_path: PathBuf = out_dir.join("annotations.csv");
    table.write_csv(&table_path)?;
    Ok(DatasetBundle { table_path, media_dir, target_index: 2 })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SyntheticSpec {
        SyntheticSpec { num_classes: 3, videos_per_class: 10, frames: 6, height: 8, width: 8, channels: 1, ..Default::default() }
    }

    #[test]
    fn counts_rows_and_files() {
        let dir = tempfile::tempdir().unwrap();
        let bundle = generate_synthetic_dataset(&small(), dir.path()).unwrap();
        let table = crate::table::load_annotations(&bundle.table_path, 2).unwrap();
        assert_eq!(table.len(), 30);
        let files = fs::read_dir(&bundle.media_dir)
            .unwrap()
            .filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "rawvid"))
            .count();
        assert_eq!(files, 30);
        assert_eq!(table.rows()[10][2], "left");
    }

    #[test]
    fn noiseless_square_moves_one_pixel_per_frame() {
        let spec = SyntheticSpec { noise_std: 0.0, frames: 3, height: 32, width: 32, channels: 1, ..small() };
        let clip = render_clip(&spec, 0, 0);
        let col_of_first_bright = |t: usize| {
            (0..32).find(|&x| (0..32).any(|y| clip.get(t, y, x, 0) == 224)).unwrap()
        };
        assert_eq!(col_of_first_bright(1), col_of_first_bright(0) + 1);
        assert_eq!(col_of_first_bright(2), col_of_first_bright(0) + 2);
        let bright = clip.frame(0).iter().filter(|&&v| v == 224).count();
        assert_eq!(bright, 64);
    }

    #[test]
    fn rejects_bad_spec() {
        let dir = tempfile::tempdir().unwrap();
        let spec = SyntheticSpec { num_classes: 9, ..small() };
        assert!(matches!(generate_synthetic_dataset(&spec, dir.path()), Err(SynthError::InvalidSpec(_))));
    }
}
