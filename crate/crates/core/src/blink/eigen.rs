//! Eigenimage decomposition of eye-crop datasets.
//!
//! For `n` training images of dimension 576 with `n` typically well below
//! 576, the principal components are recovered from the `n x n` Gram matrix
//! of mean-centered images instead of the 576x576 scatter matrix: the Gram
//! eigenvectors are mapped back to image space and normalized. Components
//! whose eigenvalue falls below `1e-12` of the largest are dropped, so the
//! returned basis never contains numerically meaningless directions.

use nalgebra::{DMatrix, SymmetricEigen};

use crate::blink::image::EyeImage;
use crate::error::{Error, Result};

/// Relative eigenvalue cutoff below which a component is discarded.
const RANK_EPS: f64 = 1e-12;

/// An orthonormal basis of eigenimages with the dataset mean.
///
/// `components` holds `k` orthonormal vectors ordered by descending
/// eigenvalue; `k` can be smaller than the requested count when the training
/// data has lower numerical rank.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenBasis {
    /// Mean of the training images, subtracted before projection.
    pub mean_image: Vec<f64>,
    /// Orthonormal eigenimages, strongest variance direction first.
    pub components: Vec<Vec<f64>>,
    /// Number of retained components (`components.len()`).
    pub k: usize,
}

impl EigenBasis {
    /// Coefficients of `img` in the basis: `c_i = <pixels - mean, comp_i>`.
    pub fn project(&self, img: &EyeImage) -> Vec<f64> {
        self.project_vector(img.pixels())
    }

    pub(crate) fn project_vector(&self, pixels: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(pixels)
                    .zip(&self.mean_image)
                    .map(|((ci, p), m)| ci * (p - m))
                    .sum()
            })
            .collect()
    }

    /// Maps coefficients back to image space: `mean + sum c_i * comp_i`.
    pub fn reconstruct(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = self.mean_image.clone();
        for (c, comp) in coeffs.iter().zip(&self.components) {
            for (o, v) in out.iter_mut().zip(comp) {
                *o += c * v;
            }
        }
        out
    }
}

/// Fits an eigenimage basis to a training set.
///
/// # Errors
/// `TooFewImages` for fewer than 2 images, `KTooLarge` when
/// `k > min(n - 1, 576)`, `InvalidConfig` for `k == 0`, and `DegenerateData`
/// when all images are identical (zero scatter).
pub fn fit_pca(images: &[EyeImage], k: usize) -> Result<EigenBasis> {
    let rows: Vec<&[f64]> = images.iter().map(|img| img.pixels()).collect();
    let (mean_image, components, _) = fit_pca_core(&rows, EyeImage::DIM, k)?;
    let k = components.len();
    Ok(EigenBasis {
        mean_image,
        components,
        k,
    })
}

/// Dimension-generic PCA core shared by [`fit_pca`] and small-scale tests.
///
/// Returns `(mean, components, eigenvalues)` where eigenvalues are those of
/// the unnormalized scatter matrix, descending, one per retained component.
pub(crate) fn fit_pca_core(
    rows: &[&[f64]],
    dim: usize,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>, Vec<f64>)> {
    let n = rows.len();
    if n < 2 {
        return Err(Error::TooFewImages { needed: 2, got: n });
    }
    if k == 0 {
        return Err(Error::InvalidConfig(
            "component count k must be at least 1".into(),
        ));
    }
    let max_k = (n - 1).min(dim);
    if k > max_k {
        return Err(Error::KTooLarge { k, max_k });
    }
    debug_assert!(rows.iter().all(|r| r.len() == dim));

    let mut mean = vec![0.0; dim];
    for row in rows {
        for (m, v) in mean.iter_mut().zip(*row) {
            *m += v;
        }
    }
    for m in &mut mean {
        *m /= n as f64;
    }
    let centered: Vec<Vec<f64>> = rows
        .iter()
        .map(|row| row.iter().zip(&mean).map(|(v, m)| v - m).collect())
        .collect();

    let gram = DMatrix::<f64>::from_fn(n, n, |i, j| {
        centered[i]
            .iter()
            .zip(&centered[j])
            .map(|(a, b)| a * b)
            .sum::<f64>()
    });
    let eig = SymmetricEigen::new(gram);
    let gram_eigenvalues: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|a, b| gram_eigenvalues[*b].partial_cmp(&gram_eigenvalues[*a]).unwrap());

    let lambda_max = gram_eigenvalues[order[0]];
    if lambda_max <= 0.0 {
        return Err(Error::DegenerateData);
    }

    let mut components = Vec::new();
    let mut eigenvalues = Vec::new();
    for &idx in order.iter().take(k) {
        let lambda = gram_eigenvalues[idx];
        if lambda <= RANK_EPS * lambda_max {
            break;
        }
        let mut u = vec![0.0; dim];
        for (i, row) in centered.iter().enumerate() {
            let vi = eig.eigenvectors[(i, idx)];
            for (uj, rj) in u.iter_mut().zip(row.iter()) {
                *uj += vi * rj;
            }
        }
        let norm = u.iter().map(|v| v * v).sum::<f64>().sqrt();
        for v in &mut u {
            *v /= norm;
        }
        components.push(u);
        eigenvalues.push(lambda);
    }
    if components.is_empty() {
        return Err(Error::DegenerateData);
    }
    Ok((mean, components, eigenvalues))
}
