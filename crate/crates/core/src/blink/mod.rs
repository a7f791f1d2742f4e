//! Eye-state classification and blink-duration extraction.
//!
//! The pipeline turns a stream of 24x24 eye crops into a sequence of
//! open/closed labels, repairs single-frame dropouts, and reports maximal
//! closed runs as blink events with durations:
//!
//! - [`image`]: the [`EyeImage`] type and histogram-equalization preprocessing
//! - [`eigen`]: eigenimage bases fitted with the Gram-matrix trick
//! - [`lda`]: Fisher discriminant classifier over eigenimage coefficients
//! - [`mlp`]: a 576-16-1 feedforward alternative classifier
//!
//! Frames where no eye crop exists carry the dedicated [`FrameLabel::NoEye`]
//! label: it is never rewritten by post-processing, never counts as a closed
//! neighbor, and terminates blink runs.

mod eigen;
mod image;
mod lda;
mod mlp;
mod serial;

pub use eigen::{fit_pca, EigenBasis};
pub use image::{preprocess_eye, EyeImage};
pub use lda::{classify_lda, fit_lda, LdaModel};
pub use mlp::{
    classify_mlp, fit_mlp, mlp_loss, mlp_loss_and_gradient, MlpGradients, MlpModel, MLP_HIDDEN,
    MLP_INPUT,
};

use crate::error::{Error, Result};

/// Per-frame eye state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FrameLabel {
    Open,
    Closed,
    /// No eye crop was available for this frame (detection failure). Not a
    /// classification outcome: it originates at ingestion.
    NoEye,
}

impl std::fmt::Display for FrameLabel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            FrameLabel::Open => "open",
            FrameLabel::Closed => "closed",
            FrameLabel::NoEye => "noeye",
        })
    }
}

impl std::str::FromStr for FrameLabel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "open" => Ok(FrameLabel::Open),
            "closed" => Ok(FrameLabel::Closed),
            "noeye" => Ok(FrameLabel::NoEye),
            other => Err(Error::InvalidData(format!("unknown frame label {other:?}"))),
        }
    }
}

/// One maximal run of Closed frames.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlinkEvent {
    /// First frame of the run.
    pub start_frame: usize,
    /// One past the last frame of the run (exclusive).
    pub end_frame: usize,
    /// Run length in frames (`end_frame - start_frame`).
    pub duration_frames: usize,
    /// Run length in seconds (`duration_frames / fps`).
    pub duration_s: f64,
}

/// Post-processed labels together with the extracted blink events.
#[derive(Debug, Clone, PartialEq)]
pub struct BlinkTimeline {
    /// Labels after single-frame gap repair.
    pub labels: Vec<FrameLabel>,
    /// Frame rate the durations are expressed against.
    pub fps: f64,
    /// Maximal Closed runs, non-overlapping and ascending.
    pub events: Vec<BlinkEvent>,
}

/// Repairs single-frame dropouts: every Open frame whose immediate
/// neighbors are both Closed becomes Closed.
///
/// Decisions are taken against the input array in one left-to-right pass, so
/// repaired frames never enable further repairs and the operation is
/// idempotent. NoEye frames are never rewritten and never count as a Closed
/// neighbor.
pub fn postprocess_labels(labels: &[FrameLabel]) -> Vec<FrameLabel> {
    let mut out = labels.to_vec();
    for i in 1..labels.len().saturating_sub(1) {
        if labels[i] == FrameLabel::Open
            && labels[i - 1] == FrameLabel::Closed
            && labels[i + 1] == FrameLabel::Closed
        {
            out[i] = FrameLabel::Closed;
        }
    }
    out
}

/// Post-processes labels and extracts maximal Closed runs as blink events.
///
/// NoEye terminates a run without extending it. Durations are reported in
/// frames and in seconds at the given frame rate.
///
/// # Errors
/// `InvalidConfig` if `fps` is not strictly positive.
pub fn blink_events(labels: &[FrameLabel], fps: f64) -> Result<BlinkTimeline> {
    if !(fps > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "fps must be positive, got {fps}"
        )));
    }
    let labels = postprocess_labels(labels);
    let mut events = Vec::new();
    let mut run_start: Option<usize> = None;
    for (i, label) in labels.iter().enumerate() {
        match (label, run_start) {
            (FrameLabel::Closed, None) => run_start = Some(i),
            (FrameLabel::Closed, Some(_)) => {}
            (_, Some(start)) => {
                events.push(make_event(start, i, fps));
                run_start = None;
            }
            (_, None) => {}
        }
    }
    if let Some(start) = run_start {
        events.push(make_event(start, labels.len(), fps));
    }
    Ok(BlinkTimeline {
        labels,
        fps,
        events,
    })
}

fn make_event(start: usize, end: usize, fps: f64) -> BlinkEvent {
    BlinkEvent {
        start_frame: start,
        end_frame: end,
        duration_frames: end - start,
        duration_s: (end - start) as f64 / fps,
    }
}

/// Classification accuracy from a two-class confusion count
/// `(open_correct, open_wrong, closed_correct, closed_wrong)`.
///
/// # Errors
/// `EmptyInput` when all four counts are zero.
pub fn accuracy(confusion: (usize, usize, usize, usize)) -> Result<f64> {
    let (open_correct, open_wrong, closed_correct, closed_wrong) = confusion;
    let total = open_correct + open_wrong + closed_correct + closed_wrong;
    if total == 0 {
        return Err(Error::EmptyInput("confusion counts"));
    }
    Ok((open_correct + closed_correct) as f64 / total as f64)
}

/// A trained eye-state classifier of either family, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum BlinkModel {
    Lda(LdaModel),
    Mlp(MlpModel),
}

impl BlinkModel {
    /// Kind tag used in the model-file header.
    pub fn kind(&self) -> &'static str {
        match self {
            BlinkModel::Lda(_) => "lda",
            BlinkModel::Mlp(_) => "mlp",
        }
    }

    /// Classifies one preprocessed eye image, returning the label and the
    /// model's raw score (LDA discriminant score or MLP probability).
    pub fn classify(&self, img: &EyeImage) -> (FrameLabel, f64) {
        match self {
            BlinkModel::Lda(m) => classify_lda(m, img),
            BlinkModel::Mlp(m) => classify_mlp(m, img),
        }
    }

    /// Serializes to the versioned text format; the first line identifies
    /// the model kind.
    pub fn to_text(&self) -> String {
        match self {
            BlinkModel::Lda(m) => m.to_text(),
            BlinkModel::Mlp(m) => m.to_text(),
        }
    }

    /// Parses either model kind, dispatching on the header line.
    pub fn from_text(text: &str) -> Result<Self> {
        let header = text.lines().next().unwrap_or("").trim();
        match header {
            "pulsegaze-model v1 lda" => Ok(BlinkModel::Lda(LdaModel::from_text(text)?)),
            "pulsegaze-model v1 mlp" => Ok(BlinkModel::Mlp(MlpModel::from_text(text)?)),
            other => Err(Error::InvalidData(format!(
                "unknown model header: {other:?}"
            ))),
        }
    }
}
