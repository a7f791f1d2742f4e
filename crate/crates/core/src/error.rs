//! Error type shared by every module in the crate.

use thiserror::Error;

/// All failure modes of the library.
///
/// Display messages start with the variant name so that callers (and the CLI,
/// which prints them to stderr) can identify the condition without matching.
#[derive(Debug, Error)]
pub enum Error {
    #[error("RoiOutOfBounds: roi {x0},{y0} {w}x{h} exceeds frame {frame_w}x{frame_h}")]
    RoiOutOfBounds {
        x0: usize,
        y0: usize,
        w: usize,
        h: usize,
        frame_w: usize,
        frame_h: usize,
    },

    #[error("EmptyInput: {0}")]
    EmptyInput(&'static str),

    #[error("MixedDimensions: frame {index} is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    MixedDimensions {
        index: usize,
        got_w: usize,
        got_h: usize,
        want_w: usize,
        want_h: usize,
    },

    #[error("TooShort: need at least {needed} samples, got {got}")]
    TooShort { needed: usize, got: usize },

    #[error("ZeroVariance: standard deviation below 1e-12")]
    ZeroVariance,

    #[error("ZeroMeanChannel: channel {0} has zero temporal mean")]
    ZeroMeanChannel(&'static str),

    #[error("InvalidBand: need 0 < f_low < f_high < fs/2, got f_low={f_low}, f_high={f_high}, fs={fs}")]
    InvalidBand { f_low: f64, f_high: f64, fs: f64 },

    #[error("EmptyBand: no spectrum bin inside [{f_low}, {f_high}] Hz")]
    EmptyBand { f_low: f64, f_high: f64 },

    #[error("NoAdequatePeak: in-band peak magnitude {peak} below {ratio} of in-band total {total}")]
    NoAdequatePeak { peak: f64, ratio: f64, total: f64 },

    #[error("SingularCovariance: channel covariance is rank deficient (min eigenvalue {0:e})")]
    SingularCovariance(f64),

    #[error("NoConvergence: FastICA did not converge within {0} iterations")]
    NoConvergence(usize),

    #[error("NoPulseComponent: no source has an adequate in-band spectral peak")]
    NoPulseComponent,

    #[error("TraceTooShort: trace spans {got_s:.3} s, window needs {needed_s:.3} s")]
    TraceTooShort { needed_s: f64, got_s: f64 },

    #[error("AllWindowsFailed: every analysis window was skipped")]
    AllWindowsFailed,

    #[error("TooFewImages: need at least {needed} images, got {got}")]
    TooFewImages { needed: usize, got: usize },

    #[error("KTooLarge: k={k} exceeds min(num_images-1, dim) = {max_k}")]
    KTooLarge { k: usize, max_k: usize },

    #[error("DegenerateData: training images carry no variance")]
    DegenerateData,

    #[error("DegenerateClass: zero within-class scatter and equal class means")]
    DegenerateClass,

    #[error("NonFiniteLoss: training diverged at epoch {epoch} (loss {loss})")]
    NonFiniteLoss { epoch: usize, loss: f64 },

    #[error("InvalidConfig: {0}")]
    InvalidConfig(String),

    #[error("InvalidData: {0}")]
    InvalidData(String),

    #[error("Io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
