//! Camera-based vital-sign analysis: heart-rate estimation from RGB skin
//! color traces and eye-blink detection from cropped eye images.
//!
//! Two independent pulse estimators are provided and deliberately kept
//! separate so they can cross-check each other:
//! - `ica`: blind source separation (FastICA) over the standardized
//!   channel trace, with prior-guided pulse component selection
//! - `chrom`: the chrominance method, a fixed linear projection of
//!   mean-normalized channels with an adaptive alpha that cancels common
//!   multiplicative distortion
//!
//! ## Modules
//! - `trace`: frames, ROIs, channel traces, z-score standardization
//! - `filters`: Butterworth bandpass (0.67-3 Hz default) and spectra
//! - `ica` / `chrom`: the two BVP estimators
//! - `hr`: windowed median heart-rate aggregation and error summaries
//! - `blink`: eye preprocessing, PCA/LDA and MLP classifiers, blink events
//! - `synth`: seeded synthetic generators with known ground truth
//! - `io`: PPM/PGM codecs, trace CSV, dataset manifests, model files

pub mod blink;
pub mod chrom;
pub mod error;
pub mod filters;
pub mod hr;
pub mod ica;
pub mod io;
mod stats;
pub mod synth;
pub mod trace;

pub use error::{Error, Result};

/// Estimated blood-volume-pulse waveform with its sample rate.
///
/// Produced by the bandpass stage of either estimator, so samples are
/// zero-phase filtered and the mean is near zero.
#[derive(Debug, Clone)]
pub struct BvpSignal {
    pub samples: Vec<f64>,
    pub fps: f64,
}

impl BvpSignal {
    pub fn new(samples: Vec<f64>, fps: f64) -> Result<Self> {
        if samples.len() < 16 {
            return Err(Error::TooShort {
                needed: 16,
                got: samples.len(),
            });
        }
        if !(fps > 0.0) {
            return Err(Error::InvalidData(format!("fps must be positive, got {fps}")));
        }
        Ok(Self { samples, fps })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}
