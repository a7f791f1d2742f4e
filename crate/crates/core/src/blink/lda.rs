//! Two-class Fisher discriminant over eigenimage coefficients.
//!
//! Training projects every eye image onto an [`EigenBasis`] and fits the
//! classical Fisher direction `w = Sw^-1 (mu_closed - mu_open)` in that
//! k-dimensional space. The pooled within-class scatter is regularized by a
//! small diagonal term because it is guaranteed singular whenever `k` is not
//! far below the sample count. The decision threshold is the midpoint of the
//! projected class means, and scores above it mean Closed.

use nalgebra::{DMatrix, DVector};

use crate::blink::eigen::EigenBasis;
use crate::blink::image::EyeImage;
use crate::blink::serial::{parse_tagged_floats, push_tagged_floats};
use crate::blink::FrameLabel;
use crate::error::{Error, Result};

/// Relative strength of the diagonal regularizer added to the scatter.
const SCATTER_REG: f64 = 1e-6;
/// Below this trace the within-class scatter is treated as exactly zero.
const ZERO_SCATTER: f64 = 1e-30;

/// A trained discriminant: basis, direction, and decision threshold.
///
/// The positive side of the threshold is the Closed class.
#[derive(Debug, Clone, PartialEq)]
pub struct LdaModel {
    /// Eigenimage basis the discriminant lives in.
    pub basis: EigenBasis,
    /// Discriminant direction in coefficient space (length `basis.k`).
    pub w: Vec<f64>,
    /// Scores strictly above this value classify as Closed.
    pub threshold: f64,
}

impl LdaModel {
    /// Line-oriented text form; floats carry enough digits for a bit-exact
    /// round trip.
    pub fn to_text(&self) -> String {
        let mut out = String::from("pulsegaze-model v1 lda\n");
        out.push_str(&format!("k {}\n", self.basis.k));
        push_tagged_floats(&mut out, "mean", &self.basis.mean_image);
        for c in &self.basis.components {
            push_tagged_floats(&mut out, "component", c);
        }
        push_tagged_floats(&mut out, "w", &self.w);
        push_tagged_floats(&mut out, "threshold", &[self.threshold]);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != "pulsegaze-model v1 lda" {
            return Err(Error::InvalidData(format!(
                "unexpected lda header: {header:?}"
            )));
        }
        let k_line = lines
            .next()
            .ok_or_else(|| Error::InvalidData("missing k line".into()))?;
        let k: usize = k_line
            .strip_prefix("k ")
            .ok_or_else(|| Error::InvalidData(format!("expected k line, got {k_line:?}")))?
            .trim()
            .parse()
            .map_err(|e| Error::InvalidData(format!("bad k value: {e}")))?;
        let mean_image = parse_tagged_floats(lines.next(), "mean", EyeImage::DIM)?;
        let mut components = Vec::with_capacity(k);
        for _ in 0..k {
            components.push(parse_tagged_floats(lines.next(), "component", EyeImage::DIM)?);
        }
        let w = parse_tagged_floats(lines.next(), "w", k)?;
        let threshold = parse_tagged_floats(lines.next(), "threshold", 1)?[0];
        Ok(Self {
            basis: EigenBasis {
                mean_image,
                components,
                k,
            },
            w,
            threshold,
        })
    }
}

/// Fits a Fisher discriminant between open and closed eye images.
///
/// # Errors
/// `TooFewImages` if either class has fewer than 2 images, and
/// `DegenerateClass` when the within-class scatter is zero *and* the class
/// means coincide, leaving no discriminating direction. Zero scatter with
/// distinct means falls back to `w = mu_closed - mu_open`.
pub fn fit_lda(basis: EigenBasis, open: &[EyeImage], closed: &[EyeImage]) -> Result<LdaModel> {
    for class in [open, closed] {
        if class.len() < 2 {
            return Err(Error::TooFewImages {
                needed: 2,
                got: class.len(),
            });
        }
    }
    let k = basis.k;
    let open_proj: Vec<Vec<f64>> = open.iter().map(|img| basis.project(img)).collect();
    let closed_proj: Vec<Vec<f64>> = closed.iter().map(|img| basis.project(img)).collect();

    let class_mean = |projs: &[Vec<f64>]| -> Vec<f64> {
        let mut m = vec![0.0; k];
        for p in projs {
            for (mi, pi) in m.iter_mut().zip(p) {
                *mi += pi;
            }
        }
        for mi in &mut m {
            *mi /= projs.len() as f64;
        }
        m
    };
    let mu_open = class_mean(&open_proj);
    let mu_closed = class_mean(&closed_proj);
    let mu_diff: Vec<f64> = mu_closed.iter().zip(&mu_open).map(|(c, o)| c - o).collect();

    let mut scatter = DMatrix::zeros(k, k);
    for (projs, mu) in [(&open_proj, &mu_open), (&closed_proj, &mu_closed)] {
        for p in projs.iter() {
            let d: Vec<f64> = p.iter().zip(mu).map(|(pi, mi)| pi - mi).collect();
            for i in 0..k {
                for j in 0..k {
                    scatter[(i, j)] += d[i] * d[j];
                }
            }
        }
    }
    let trace: f64 = (0..k).map(|i| scatter[(i, i)]).sum();

    let w = if trace < ZERO_SCATTER {
        let diff_norm = mu_diff.iter().map(|v| v * v).sum::<f64>().sqrt();
        if diff_norm < 1e-12 {
            return Err(Error::DegenerateClass);
        }
        mu_diff.clone()
    } else {
        let reg = SCATTER_REG * trace / k as f64;
        for i in 0..k {
            scatter[(i, i)] += reg;
        }
        let rhs = DVector::from_column_slice(&mu_diff);
        let solved = scatter
            .clone()
            .cholesky()
            .map(|c| c.solve(&rhs))
            .or_else(|| scatter.lu().solve(&rhs))
            .ok_or(Error::DegenerateClass)?;
        solved.iter().copied().collect()
    };

    let score = |mu: &[f64]| -> f64 { mu.iter().zip(&w).map(|(m, wi)| m * wi).sum() };
    let threshold = 0.5 * (score(&mu_closed) + score(&mu_open));
    Ok(LdaModel {
        basis,
        w,
        threshold,
    })
}

/// Scores an image against the discriminant.
///
/// Returns the label together with the raw score `<project(img), w>`; the
/// label is Closed exactly when the score strictly exceeds the threshold.
/// NoEye is never produced here; it originates at ingestion.
pub fn classify_lda(m: &LdaModel, img: &EyeImage) -> (FrameLabel, f64) {
    let score: f64 = m
        .basis
        .project(img)
        .iter()
        .zip(&m.w)
        .map(|(p, wi)| p * wi)
        .sum();
    let label = if score > m.threshold {
        FrameLabel::Closed
    } else {
        FrameLabel::Open
    };
    (label, score)
}
