//! Frame-level preprocessing: temporal segment sampling, bilinear scaling,
//! normalization and hand-crafted motion features.

use rand::Rng;
use thiserror::Error;

use crate::frames::{FrameError, RawFrames, TensorFrames};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VideoError {
    #[error("std of channel {0} is not positive")]
    ZeroStd(usize),
    #[error("expected {expected} per-channel statistics, got {got}")]
    StatsLength { expected: usize, got: usize },
    #[error("segment count and output size must be at least 1")]
    ZeroSize,
    #[error(transparent)]
    Frame(#[from] FrameError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SegmentMode {
    /// Uniform pick inside each segment.
    TrainRandom,
    /// Middle frame of each segment; consumes no randomness.
    EvalCenter,
}

/// Frame indices picked by temporal segment sampling.
///
/// With `t >= n`, segment `k` spans `[k*t/n, (k+1)*t/n)`. Shorter clips map
/// segment `k` to `min(k*t/n, t-1)`, repeating frames.
pub fn segment_indices<R: Rng + ?Sized>(t: usize, n: usize, mode: SegmentMode, rng: &mut R) -> Vec<usize> {
    if t == 0 || n == 0 {
        return Vec::new();
    }
    if t < n {
        return (0..n).map(|k| (k * t / n).min(t - 1)).collect();
    }
    (0..n)
        .map(|k| {
            let start = k * t / n;
            let end = (k + 1) * t / n;
            match mode {
                SegmentMode::EvalCenter => (start + end - 1) / 2,
                SegmentMode::TrainRandom => rng.random_range(start..end),
            }
        })
        .collect()
}

pub fn segment_sample<R: Rng + ?Sized>(
    frames: &RawFrames,
    n: usize,
    mode: SegmentMode,
    rng: &mut R,
) -> Result<RawFrames, VideoError> {
    if n == 0 {
        return Err(VideoError::ZeroSize);
    }
    Ok(frames.select(&segment_indices(frames.frames(), n, mode, rng))?)
}

/// Bilinear resize with half-pixel centers: source coordinate is
/// `(dst + 0.5) * in/out - 0.5`, clamped to the image. Results are rounded
/// half-up to u8.
pub fn scale_frames(frames: &RawFrames, out_h: usize, out_w: usize) -> Result<RawFrames, VideoError> {
    if out_h == 0 || out_w == 0 {
        return Err(VideoError::ZeroSize);
    }
    let (t, h, w, c) = (frames.frames(), frames.height(), frames.width(), frames.channels());
    if (h, w) == (out_h, out_w) {
        return Ok(frames.clone());
    }
    let taps = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|d| {
                let src = ((d as f64 + 0.5) * scale - 0.5).clamp(0.0, (inp - 1) as f64);
                let lo = src.floor() as usize;
                let hi = (lo + 1).min(inp - 1);
                (lo, hi, src - lo as f64)
            })
            .collect()
    };
    let rows = taps(out_h, h);
    let cols = taps(out_w, w);
    let mut data = Vec::with_capacity(t * out_h * out_w * c);
    for f in 0..t {
        for &(y0, y1, wy) in &rows {
            for &(x0, x1, wx) in &cols {
                for ch in 0..c {
                    let p = |y, x| frames.get(f, y, x, ch) as f64;
                    let v = (1.0 - wy) * ((1.0 - wx) * p(y0, x0) + wx * p(y0, x1))
                        + wy * ((1.0 - wx) * p(y1, x0) + wx * p(y1, x1));
                    data.push((v + 0.5).floor().clamp(0.0, 255.0) as u8);
                }
            }
        }
    }
    Ok(RawFrames::new(t, out_h, out_w, c, data)?)
}

/// `(sample / 255 - mean_c) / std_c` per channel.
pub fn normalize_frames(frames: &RawFrames, mean: &[f64], std: &[f64]) -> Result<TensorFrames, VideoError> {
    let c = frames.channels();
    for stats in [mean, std] {
        if stats.len() != c {
            return Err(VideoError::StatsLength { expected: c, got: stats.len() });
        }
    }
    if let Some(ch) = std.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(VideoError::ZeroStd(ch));
    }
    let data = frames
        .data()
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let ch = i % c;
            (v as f64 / 255.0 - mean[ch]) / std[ch]
        })
        .collect();
    Ok(TensorFrames::new(
        frames.frames(),
        frames.height(),
        frames.width(),
        c,
        data,
        mean.to_vec(),
        std.to_vec(),
    )?)
}

/// Mean absolute difference between consecutive frames per channel
/// (pair-major), followed by the mean intensity of every frame per channel.
/// Length is `(2N - 1) * C`.
pub fn motion_features(frames: &TensorFrames) -> Vec<f64> {
    let (n, c) = (frames.frames(), frames.channels());
    let pixels = (frames.height() * frames.width()) as f64;
    let mut out = Vec::with_capacity((2 * n - 1) * c);
    for t in 0..n.saturating_sub(1) {
        let (a, b) = (frames.frame(t), frames.frame(t + 1));
        let mut acc = vec![0.0; c];
        for (i, (x, y)) in a.iter().zip(b).enumerate() {
            acc[i % c] += (y - x).abs();
        }
        out.extend(acc.into_iter().map(|s| s / pixels));
    }
    for t in 0..n {
        let mut acc = vec![0.0; c];
        for (i, x) in frames.frame(t).iter().enumerate() {
            acc[i % c] += x;
        }
        out.extend(acc.into_iter().map(|s| s / pixels));
    }
    out
}
