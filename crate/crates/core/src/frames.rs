//! In-memory video clips.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FrameError {
    #[error("clip must have at least one frame")]
    NoFrames,
    #[error("unsupported channel count {0} (expected 1 or 3)")]
    UnsupportedChannels(usize),
    #[error("frame geometry {height}x{width} is empty")]
    EmptyGeometry { height: usize, width: usize },
    #[error("sample buffer holds {got} values, geometry needs {expected}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("clip contains non-finite values")]
    NonFinite,
}

/// `T x H x W x C` unsigned 8-bit samples, frame-major then row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawFrames {
    frames: usize,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<u8>,
}

fn check_geometry(frames: usize, height: usize, width: usize, channels: usize, len: usize) -> Result<(), FrameError> {
    if frames == 0 {
        return Err(FrameError::NoFrames);
    }
    if channels != 1 && channels != 3 {
        return Err(FrameError::UnsupportedChannels(channels));
    }
    if height == 0 || width == 0 {
        return Err(FrameError::EmptyGeometry { height, width });
    }
    let expected = frames * height * width * channels;
    if len != expected {
        return Err(FrameError::LengthMismatch { expected, got: len });
    }
    Ok(())
}

impl RawFrames {
    pub fn new(frames: usize, height: usize, width: usize, channels: usize, data: Vec<u8>) -> Result<Self, FrameError> {
        check_geometry(frames, height, width, channels, data.len())?;
        Ok(Self { frames, height, width, channels, data })
    }

    pub fn filled(frames: usize, height: usize, width: usize, channels: usize, value: u8) -> Result<Self, FrameError> {
        Self::new(frames, height, width, channels, vec![value; frames * height * width * channels])
    }

    pub fn frames(&self) -> usize {
        self.frames
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn data(&self) -> &[u8] {
        &self.data
    }
    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    pub fn frame_len(&self) -> usize {
        self.height * self.width * self.channels
    }

    pub fn frame(&self, t: usize) -> &[u8] {
        let n = self.frame_len();
        &self.data[t * n..(t + 1) * n]
    }

    pub fn get(&self, t: usize, y: usize, x: usize, c: usize) -> u8 {
        self.data[((t * self.height + y) * self.width + x) * self.channels + c]
    }

    /// Builds a clip from the listed frame indices (repeats allowed).
    pub fn select(&self, indices: &[usize]) -> Result<Self, FrameError> {
        let mut data = Vec::with_capacity(indices.len() * self.frame_len());
        for &t in indices {
            data.extend_from_slice(self.frame(t));
        }
        Self::new(indices.len(), self.height, self.width, self.channels, data)
    }
}

/// Real-valued clip plus the per-channel statistics used to produce it.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorFrames {
    frames: usize,
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl TensorFrames {
    pub fn new(
        frames: usize,
        height: usize,
        width: usize,
        channels: usize,
        data: Vec<f64>,
        mean: Vec<f64>,
        std: Vec<f64>,
    ) -> Result<Self, FrameError> {
        check_geometry(frames, height, width, channels, data.len())?;
        if data.iter().any(|v| !v.is_finite()) {
            return Err(FrameError::NonFinite);
        }
        Ok(Self { frames, height, width, channels, data, mean, std })
    }

    pub fn frames(&self) -> usize {
        self.frames
    }
    pub fn height(&self) -> usize {
        self.height
    }
    pub fn width(&self) -> usize {
        self.width
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.height * self.width * self.channels;
        &self.data[t * n..(t + 1) * n]
    }
}
