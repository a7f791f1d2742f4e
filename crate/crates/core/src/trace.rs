//! Color-trace types, ROI spatial averaging, and per-channel z-score
//! standardization (the normalization used by the ICA estimator).

use crate::error::{Error, Result};
use crate::stats;

/// One RGB video frame, 8-bit per channel, row-major.
#[derive(Debug, Clone)]
pub struct Frame {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl Frame {
    pub fn new(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput("frame dimensions must be at least 1x1"));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidData(format!(
                "frame pixel count {} does not match {}x{}",
                pixels.len(),
                width,
                height
            )));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }
}

/// Axis-aligned region of interest in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RoiSpec {
    pub x0: usize,
    pub y0: usize,
    pub w: usize,
    pub h: usize,
}

impl RoiSpec {
    fn check_inside(&self, frame: &Frame) -> Result<()> {
        let inside = self.w >= 1
            && self.h >= 1
            && self.x0 + self.w <= frame.width
            && self.y0 + self.h <= frame.height;
        if inside {
            Ok(())
        } else {
            Err(Error::RoiOutOfBounds {
                x0: self.x0,
                y0: self.y0,
                w: self.w,
                h: self.h,
                frame_w: frame.width,
                frame_h: frame.height,
            })
        }
    }
}

/// Per-frame spatial channel means over a fixed ROI, on the 0-255 scale.
#[derive(Debug, Clone)]
pub struct ChannelTrace {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    pub fps: f64,
}

impl ChannelTrace {
    pub fn new(r: Vec<f64>, g: Vec<f64>, b: Vec<f64>, fps: f64) -> Result<Self> {
        if r.is_empty() {
            return Err(Error::EmptyInput("trace must contain at least one frame"));
        }
        if r.len() != g.len() || r.len() != b.len() {
            return Err(Error::InvalidData(format!(
                "channel lengths differ: r={} g={} b={}",
                r.len(),
                g.len(),
                b.len()
            )));
        }
        if !(fps > 0.0) {
            return Err(Error::InvalidData(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { r, g, b, fps })
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }

    /// Sub-trace of `len` frames starting at `start` (used for windowing).
    pub fn slice(&self, start: usize, len: usize) -> ChannelTrace {
        ChannelTrace {
            r: self.r[start..start + len].to_vec(),
            g: self.g[start..start + len].to_vec(),
            b: self.b[start..start + len].to_vec(),
            fps: self.fps,
        }
    }
}

/// Channel-wise z-scored trace: zero mean, unit population std per channel.
#[derive(Debug, Clone)]
pub struct NormalizedTrace {
    pub r: Vec<f64>,
    pub g: Vec<f64>,
    pub b: Vec<f64>,
    pub fps: f64,
}

/// Arithmetic mean of each color channel over the ROI pixels.
pub fn roi_mean(frame: &Frame, roi: &RoiSpec) -> Result<(f64, f64, f64)> {
    roi.check_inside(frame)?;
    let mut sums = [0.0f64; 3];
    for y in roi.y0..roi.y0 + roi.h {
        let row = &frame.pixels[y * frame.width..(y + 1) * frame.width];
        for px in &row[roi.x0..roi.x0 + roi.w] {
            sums[0] += px[0] as f64;
            sums[1] += px[1] as f64;
            sums[2] += px[2] as f64;
        }
    }
    let n = (roi.w * roi.h) as f64;
    Ok((sums[0] / n, sums[1] / n, sums[2] / n))
}

/// Applies `roi_mean` to every frame, producing one trace sample per frame.
pub fn build_trace(frames: &[Frame], roi: &RoiSpec, fps: f64) -> Result<ChannelTrace> {
    let first = frames
        .first()
        .ok_or(Error::EmptyInput("build_trace needs at least one frame"))?;
    let (mut r, mut g, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for (i, frame) in frames.iter().enumerate() {
        if frame.width != first.width || frame.height != first.height {
            return Err(Error::MixedDimensions {
                index: i,
                got_w: frame.width,
                got_h: frame.height,
                want_w: first.width,
                want_h: first.height,
            });
        }
        let (rm, gm, bm) = roi_mean(frame, roi)?;
        r.push(rm);
        g.push(gm);
        b.push(bm);
    }
    ChannelTrace::new(r, g, b, fps)
}

/// Z-scores one channel: (x - mean) / std, population-std convention.
pub fn normalize_channel(x: &[f64]) -> Result<Vec<f64>> {
    if x.len() < 2 {
        return Err(Error::TooShort {
            needed: 2,
            got: x.len(),
        });
    }
    let m = stats::mean(x);
    let s = stats::pop_std(x);
    if s < 1e-12 {
        return Err(Error::ZeroVariance);
    }
    Ok(x.iter().map(|v| (v - m) / s).collect())
}

/// Channel-wise `normalize_channel` over a whole trace.
pub fn normalize_trace(t: &ChannelTrace) -> Result<NormalizedTrace> {
    Ok(NormalizedTrace {
        r: normalize_channel(&t.r)?,
        g: normalize_channel(&t.g)?,
        b: normalize_channel(&t.b)?,
        fps: t.fps,
    })
}
