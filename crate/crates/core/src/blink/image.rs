//! Fixed-size grayscale eye crops and contrast normalization.
//!
//! Every classifier in this module family consumes a 24x24 grayscale patch
//! flattened to a 576-dimensional vector. [`preprocess_eye`] applies 256-bin
//! histogram equalization so that lighting and contrast differences between
//! capture sessions do not dominate the classifiers' input space.

use crate::error::{Error, Result};

/// A 24x24 grayscale eye crop stored row-major as 576 real-valued pixels.
///
/// Pixel values live in `[0, 255]`. The `equalized` flag records whether
/// [`preprocess_eye`] has already been applied, so downstream training code
/// can assert it operates on normalized inputs.
#[derive(Debug, Clone, PartialEq)]
pub struct EyeImage {
    pixels: Vec<f64>,
    equalized: bool,
}

impl EyeImage {
    /// Side length of the square crop, in pixels.
    pub const SIDE: usize = 24;
    /// Flattened dimension (`SIDE * SIDE`).
    pub const DIM: usize = 576;

    /// Builds an image from raw pixel values.
    ///
    /// # Errors
    /// `InvalidData` if the length is not 576 or any value is outside
    /// `[0, 255]` or non-finite.
    pub fn from_pixels(pixels: Vec<f64>) -> Result<Self> {
        if pixels.len() != Self::DIM {
            return Err(Error::InvalidData(format!(
                "eye image has {} pixels, expected {}",
                pixels.len(),
                Self::DIM
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !v.is_finite() || **v < 0.0 || **v > 255.0) {
            return Err(Error::InvalidData(format!(
                "eye image pixel {v} outside [0, 255]"
            )));
        }
        Ok(Self {
            pixels,
            equalized: false,
        })
    }

    /// Builds an image from exactly 576 grayscale bytes (row-major 24x24).
    ///
    /// # Errors
    /// `InvalidData` if the byte count is not 576.
    pub fn from_gray(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != Self::DIM {
            return Err(Error::InvalidData(format!(
                "eye image has {} bytes, expected {}",
                bytes.len(),
                Self::DIM
            )));
        }
        Ok(Self {
            pixels: bytes.iter().map(|b| f64::from(*b)).collect(),
            equalized: false,
        })
    }

    /// Builds an image by bilinearly resampling an arbitrary-size grayscale
    /// buffer down (or up) to 24x24.
    ///
    /// Sampling is center-aligned: destination pixel centers map onto source
    /// pixel centers, and coordinates are clamped at the borders.
    ///
    /// # Errors
    /// `EmptyInput` if either dimension is zero; `InvalidData` if the buffer
    /// length does not equal `width * height`.
    pub fn from_gray_resized(width: usize, height: usize, bytes: &[u8]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyInput("eye image dimensions"));
        }
        if bytes.len() != width * height {
            return Err(Error::InvalidData(format!(
                "eye image buffer has {} bytes, expected {}x{}={}",
                bytes.len(),
                width,
                height,
                width * height
            )));
        }
        let sample = |x: usize, y: usize| f64::from(bytes[y * width + x]);
        let scale_x = width as f64 / Self::SIDE as f64;
        let scale_y = height as f64 / Self::SIDE as f64;
        let mut pixels = Vec::with_capacity(Self::DIM);
        for dy in 0..Self::SIDE {
            let sy = ((dy as f64 + 0.5) * scale_y - 0.5).clamp(0.0, (height - 1) as f64);
            let y0 = sy.floor() as usize;
            let y1 = (y0 + 1).min(height - 1);
            let fy = sy - y0 as f64;
            for dx in 0..Self::SIDE {
                let sx = ((dx as f64 + 0.5) * scale_x - 0.5).clamp(0.0, (width - 1) as f64);
                let x0 = sx.floor() as usize;
                let x1 = (x0 + 1).min(width - 1);
                let fx = sx - x0 as f64;
                let top = sample(x0, y0) * (1.0 - fx) + sample(x1, y0) * fx;
                let bottom = sample(x0, y1) * (1.0 - fx) + sample(x1, y1) * fx;
                pixels.push(top * (1.0 - fy) + bottom * fy);
            }
        }
        Ok(Self {
            pixels,
            equalized: false,
        })
    }

    /// Row-major pixel values.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    /// Whether [`preprocess_eye`] has been applied.
    pub fn is_equalized(&self) -> bool {
        self.equalized
    }

    /// Quantizes the image back to bytes (round half away from zero, clamped).
    pub fn to_gray_bytes(&self) -> Vec<u8> {
        self.pixels
            .iter()
            .map(|v| v.round().clamp(0.0, 255.0) as u8)
            .collect()
    }

    pub(crate) fn from_parts(pixels: Vec<f64>, equalized: bool) -> Self {
        Self { pixels, equalized }
    }
}

/// Applies 256-bin histogram equalization to an eye image.
///
/// Pixels are binned by rounding to the nearest integer gray level; each
/// level `v` is remapped to `255 * (cdf(v) - cdf_min) / (n - cdf_min)` where
/// `cdf_min` is the cumulative count at the lowest occupied level. A constant
/// image has a degenerate histogram (`cdf_min == n`) and is returned
/// unchanged. The output always has the `equalized` flag set.
pub fn preprocess_eye(img: &EyeImage) -> EyeImage {
    let n = EyeImage::DIM;
    let mut counts = [0usize; 256];
    let bins: Vec<usize> = img
        .pixels
        .iter()
        .map(|v| (v.round().clamp(0.0, 255.0)) as usize)
        .collect();
    for b in &bins {
        counts[*b] += 1;
    }
    let mut cdf = [0usize; 256];
    let mut acc = 0usize;
    for (level, count) in counts.iter().enumerate() {
        acc += count;
        cdf[level] = acc;
    }
    let cdf_min = counts
        .iter()
        .position(|c| *c > 0)
        .map(|level| cdf[level])
        .unwrap_or(n);
    if cdf_min == n {
        return EyeImage::from_parts(img.pixels.clone(), true);
    }
    let denom = (n - cdf_min) as f64;
    let pixels = bins
        .iter()
        .map(|b| 255.0 * (cdf[*b] - cdf_min) as f64 / denom)
        .collect();
    EyeImage::from_parts(pixels, true)
}
