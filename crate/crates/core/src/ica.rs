//! FastICA blind source separation over the standardized channel trace and
//! prior-guided selection of the pulse component.
//!
//! The variant is symmetric FastICA with the tanh contrast: whitening via
//! eigendecomposition of the 3x3 channel covariance, a seeded random
//! initial unmixing matrix, and symmetric decorrelation after every
//! fixed-point update.

use nalgebra::Matrix3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::filters::{design_bandpass, dominant_frequency, spectrum};
use crate::trace::{normalize_trace, ChannelTrace, NormalizedTrace};
use crate::BvpSignal;

/// Fixed-point iteration controls.
#[derive(Debug, Clone, Copy)]
pub struct IcaOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IcaOptions {
    fn default() -> Self {
        Self {
            max_iter: 200,
            tol: 1e-6,
        }
    }
}

/// Fitted unmixing transform: sources = w * whitener * (x - channel_means).
///
/// `w` is orthonormal in the whitened space, so recovered sources have unit
/// population variance on the fitting data.
#[derive(Debug, Clone, PartialEq)]
pub struct UnmixingMatrix {
    pub w: [[f64; 3]; 3],
    pub whitener: [[f64; 3]; 3],
    pub channel_means: [f64; 3],
}

/// The three recovered source signals (unit variance on the fitting data).
#[derive(Debug, Clone)]
pub struct SourceSet {
    pub sources: [Vec<f64>; 3],
    pub fps: f64,
}

impl UnmixingMatrix {
    /// Applies the stored transform to a standardized trace.
    pub fn transform(&self, t: &NormalizedTrace) -> SourceSet {
        let mut m = [[0.0f64; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    m[i][j] += self.w[i][k] * self.whitener[k][j];
                }
            }
        }
        let chans = [&t.r, &t.g, &t.b];
        let n = t.r.len();
        let mut sources = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
        for i in 0..3 {
            for t_idx in 0..n {
                let mut acc = 0.0;
                for j in 0..3 {
                    acc += m[i][j] * (chans[j][t_idx] - self.channel_means[j]);
                }
                sources[i][t_idx] = acc;
            }
        }
        SourceSet {
            sources,
            fps: t.fps,
        }
    }

    /// Line-oriented text form; floats carry 18 significant digits so the
    /// round trip is bit-exact.
    pub fn to_text(&self) -> String {
        let mut out = String::from("pulsegaze-model v1 unmixing\n");
        let row = |tag: &str, v: &[f64; 3]| {
            format!("{tag} {:.17e} {:.17e} {:.17e}\n", v[0], v[1], v[2])
        };
        out.push_str(&row("means", &self.channel_means));
        for r in &self.whitener {
            out.push_str(&row("whitener", r));
        }
        for r in &self.w {
            out.push_str(&row("w", r));
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != "pulsegaze-model v1 unmixing" {
            return Err(Error::InvalidData(format!(
                "unexpected unmixing header: {header:?}"
            )));
        }
        let mut parse_row = |tag: &str| -> Result<[f64; 3]> {
            let line = lines
                .next()
                .ok_or_else(|| Error::InvalidData(format!("missing {tag} line")))?;
            let mut parts = line.split_whitespace();
            if parts.next() != Some(tag) {
                return Err(Error::InvalidData(format!("expected {tag} line, got {line:?}")));
            }
            let mut v = [0.0; 3];
            for slot in &mut v {
                *slot = parts
                    .next()
                    .ok_or_else(|| Error::InvalidData(format!("short {tag} line")))?
                    .parse()
                    .map_err(|e| Error::InvalidData(format!("bad float in {tag} line: {e}")))?;
            }
            Ok(v)
        };
        let channel_means = parse_row("means")?;
        let mut whitener = [[0.0; 3]; 3];
        for r in &mut whitener {
            *r = parse_row("whitener")?;
        }
        let mut w = [[0.0; 3]; 3];
        for r in &mut w {
            *r = parse_row("w")?;
        }
        Ok(Self {
            w,
            whitener,
            channel_means,
        })
    }
}

/// Eigenvalues/vectors of a symmetric 3x3, sorted by descending eigenvalue
/// with a deterministic sign convention per eigenvector.
fn sorted_symmetric_eigen(m: Matrix3<f64>) -> ([f64; 3], Matrix3<f64>) {
    let eig = nalgebra::SymmetricEigen::new(m);
    let mut order = [0usize, 1, 2];
    order.sort_by(|&a, &b| eig.eigenvalues[b].partial_cmp(&eig.eigenvalues[a]).unwrap());
    let mut vals = [0.0; 3];
    let mut vecs = Matrix3::<f64>::zeros();
    for (dst, &src) in order.iter().enumerate() {
        vals[dst] = eig.eigenvalues[src];
        let mut col = eig.eigenvectors.column(src).clone_owned();
        let lead = (0..3).max_by(|&a, &b| col[a].abs().partial_cmp(&col[b].abs()).unwrap());
        if col[lead.unwrap()] < 0.0 {
            col = -col;
        }
        vecs.set_column(dst, &col);
    }
    (vals, vecs)
}

/// W <- (W W^T)^(-1/2) W, making the rows exactly orthonormal.
fn symmetric_decorrelation(w: Matrix3<f64>) -> Matrix3<f64> {
    let (vals, vecs) = sorted_symmetric_eigen(w * w.transpose());
    let mut d = Matrix3::<f64>::zeros();
    for i in 0..3 {
        d[(i, i)] = 1.0 / vals[i].max(1e-300).sqrt();
    }
    vecs * d * vecs.transpose() * w
}

/// Fits symmetric FastICA with default iteration controls.
pub fn fastica_fit(t: &NormalizedTrace, seed: u64) -> Result<(UnmixingMatrix, SourceSet)> {
    fastica_fit_with(t, seed, &IcaOptions::default())
}

pub fn fastica_fit_with(
    t: &NormalizedTrace,
    seed: u64,
    opts: &IcaOptions,
) -> Result<(UnmixingMatrix, SourceSet)> {
    let n = t.r.len();
    if n < 64 {
        return Err(Error::TooShort { needed: 64, got: n });
    }
    let chans = [&t.r, &t.g, &t.b];
    let means = [
        crate::stats::mean(&t.r),
        crate::stats::mean(&t.g),
        crate::stats::mean(&t.b),
    ];
    let centered: Vec<Vec<f64>> = (0..3)
        .map(|c| chans[c].iter().map(|v| v - means[c]).collect())
        .collect();

    let mut cov = Matrix3::<f64>::zeros();
    for i in 0..3 {
        for j in i..3 {
            let s: f64 = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
            cov[(i, j)] = s / n as f64;
            cov[(j, i)] = cov[(i, j)];
        }
    }
    let (vals, vecs) = sorted_symmetric_eigen(cov);
    if vals[2] < 1e-10 {
        return Err(Error::SingularCovariance(vals[2]));
    }
    // whitener = D^(-1/2) E^T
    let mut whitener = Matrix3::<f64>::zeros();
    for i in 0..3 {
        let scale = 1.0 / vals[i].sqrt();
        for j in 0..3 {
            whitener[(i, j)] = vecs[(j, i)] * scale;
        }
    }
    let z: Vec<Vec<f64>> = (0..3)
        .map(|i| {
            (0..n)
                .map(|k| {
                    whitener[(i, 0)] * centered[0][k]
                        + whitener[(i, 1)] * centered[1][k]
                        + whitener[(i, 2)] * centered[2][k]
                })
                .collect()
        })
        .collect();

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut w = Matrix3::<f64>::zeros();
    for i in 0..3 {
        for j in 0..3 {
            w[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    let mut w = symmetric_decorrelation(w);

    let mut converged = false;
    for _ in 0..opts.max_iter {
        // E[z g(w z)] - E[g'(w z)] w, rows updated jointly.
        let mut gz = Matrix3::<f64>::zeros();
        let mut gprime_mean = [0.0f64; 3];
        for i in 0..3 {
            for k in 0..n {
                let wz = w[(i, 0)] * z[0][k] + w[(i, 1)] * z[1][k] + w[(i, 2)] * z[2][k];
                let g = wz.tanh();
                gprime_mean[i] += 1.0 - g * g;
                gz[(i, 0)] += g * z[0][k];
                gz[(i, 1)] += g * z[1][k];
                gz[(i, 2)] += g * z[2][k];
            }
        }
        let mut w_new = Matrix3::<f64>::zeros();
        for i in 0..3 {
            let gp = gprime_mean[i] / n as f64;
            for j in 0..3 {
                w_new[(i, j)] = gz[(i, j)] / n as f64 - gp * w[(i, j)];
            }
        }
        let w_new = symmetric_decorrelation(w_new);
        let mut delta = 0.0f64;
        for i in 0..3 {
            let dot: f64 = (0..3).map(|j| w_new[(i, j)] * w[(i, j)]).sum();
            delta = delta.max(1.0 - dot.abs());
        }
        w = w_new;
        if delta < opts.tol {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence(opts.max_iter));
    }

    let mut sources = [vec![0.0; n], vec![0.0; n], vec![0.0; n]];
    for i in 0..3 {
        for k in 0..n {
            sources[i][k] = w[(i, 0)] * z[0][k] + w[(i, 1)] * z[1][k] + w[(i, 2)] * z[2][k];
        }
    }
    let to_arr = |m: &Matrix3<f64>| {
        let mut a = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                a[i][j] = m[(i, j)];
            }
        }
        a
    };
    Ok((
        UnmixingMatrix {
            w: to_arr(&w),
            whitener: to_arr(&whitener),
            channel_means: means,
        },
        SourceSet {
            sources,
            fps: t.fps,
        },
    ))
}

/// Index of the source whose dominant in-band frequency (x60) is closest to
/// `prior_bpm`. Ties break toward the larger peak magnitude, then the lower
/// index. Sources without an adequate in-band peak (per `min_mag_ratio`)
/// are excluded.
pub fn select_pulse_component(s: &SourceSet, prior_bpm: f64, min_mag_ratio: f64) -> Result<usize> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, src) in s.sources.iter().enumerate() {
        let spec = spectrum(src, s.fps)?;
        let (freq, mag) = match dominant_frequency(&spec, 0.67, 3.0, min_mag_ratio) {
            Ok(v) => v,
            Err(Error::NoAdequatePeak { .. }) => continue,
            Err(e) => return Err(e),
        };
        let dist = (freq * 60.0 - prior_bpm).abs();
        let better = match best {
            None => true,
            Some((_, bd, bm)) => dist < bd || (dist == bd && mag > bm),
        };
        if better {
            best = Some((i, dist, mag));
        }
    }
    best.map(|(i, _, _)| i).ok_or(Error::NoPulseComponent)
}

/// Options for the end-to-end ICA pulse pipeline.
#[derive(Debug, Clone, Copy)]
pub struct IcaBvpOptions {
    pub prior_bpm: f64,
    pub min_mag_ratio: f64,
    pub ica: IcaOptions,
}

impl Default for IcaBvpOptions {
    fn default() -> Self {
        Self {
            prior_bpm: 71.0,
            min_mag_ratio: 0.0,
            ica: IcaOptions::default(),
        }
    }
}

/// Standardize, fit FastICA, select the pulse source, bandpass it.
pub fn ica_bvp(t: &ChannelTrace, seed: u64) -> Result<BvpSignal> {
    ica_bvp_with(t, seed, &IcaBvpOptions::default())
}

pub fn ica_bvp_with(t: &ChannelTrace, seed: u64, opts: &IcaBvpOptions) -> Result<BvpSignal> {
    let normalized = normalize_trace(t)?;
    let (_, sources) = fastica_fit_with(&normalized, seed, &opts.ica)?;
    bandpass_selected(&sources, t, opts)
}

/// Fixed-W mode: applies a previously fitted unmixing matrix instead of
/// fitting one on this trace.
pub fn ica_bvp_fixed(
    t: &ChannelTrace,
    matrix: &UnmixingMatrix,
    opts: &IcaBvpOptions,
) -> Result<BvpSignal> {
    let normalized = normalize_trace(t)?;
    let sources = matrix.transform(&normalized);
    bandpass_selected(&sources, t, opts)
}

fn bandpass_selected(
    sources: &SourceSet,
    t: &ChannelTrace,
    opts: &IcaBvpOptions,
) -> Result<BvpSignal> {
    let idx = select_pulse_component(sources, opts.prior_bpm, opts.min_mag_ratio)?;
    let filter = design_bandpass(t.fps)?;
    let filtered = filter.apply(&sources.sources[idx])?;
    BvpSignal::new(filtered, t.fps)
}
