//! Chrominance-based BVP estimation.
//!
//! Channels are mean-normalized over the analysis window (Rn = R/mean(R)),
//! then projected onto two fixed chrominance axes:
//! X = 3Rn - 2Gn, Y = 1.5Rn + Gn - 1.5Bn. Both are bandpassed and combined
//! as S = X_f - alpha * Y_f with alpha the ratio of population standard
//! deviations, which cancels common multiplicative distortion.
//!
//! Mean normalization here is deliberately not the z-score used by the ICA
//! path; the two standardizations belong to different estimators.

use crate::error::{Error, Result};
use crate::filters::design_bandpass;
use crate::stats;
use crate::trace::ChannelTrace;
use crate::BvpSignal;

/// Chrominance components before and after bandpass filtering.
#[derive(Debug, Clone)]
pub struct ChromPair {
    pub x_raw: Vec<f64>,
    pub y_raw: Vec<f64>,
    pub x_f: Vec<f64>,
    pub y_f: Vec<f64>,
    pub fps: f64,
}

fn mean_normalized(x: &[f64], name: &'static str) -> Result<Vec<f64>> {
    let m = stats::mean(x);
    if m.abs() < 1e-12 {
        return Err(Error::ZeroMeanChannel(name));
    }
    Ok(x.iter().map(|v| v / m).collect())
}

/// Raw chrominance components X and Y from mean-normalized channels.
pub fn chrominance_xy(t: &ChannelTrace) -> Result<(Vec<f64>, Vec<f64>)> {
    let rn = mean_normalized(&t.r, "r")?;
    let gn = mean_normalized(&t.g, "g")?;
    let bn = mean_normalized(&t.b, "b")?;
    let x = rn
        .iter()
        .zip(&gn)
        .map(|(r, g)| 3.0 * r - 2.0 * g)
        .collect();
    let y = rn
        .iter()
        .zip(gn.iter().zip(&bn))
        .map(|(r, (g, b))| 1.5 * r + g - 1.5 * b)
        .collect();
    Ok((x, y))
}

/// Full chrominance pair: raw components plus their bandpassed versions.
pub fn chrom_pair(t: &ChannelTrace) -> Result<ChromPair> {
    let (x_raw, y_raw) = chrominance_xy(t)?;
    let filter = design_bandpass(t.fps)?;
    let x_f = filter.apply(&x_raw)?;
    let y_f = filter.apply(&y_raw)?;
    Ok(ChromPair {
        x_raw,
        y_raw,
        x_f,
        y_f,
        fps: t.fps,
    })
}

/// alpha = sigma(x_f) / sigma(y_f), population convention.
pub fn chrom_alpha(x_f: &[f64], y_f: &[f64]) -> Result<f64> {
    let sy = stats::pop_std(y_f);
    if sy < 1e-12 {
        return Err(Error::ZeroVariance);
    }
    Ok(stats::pop_std(x_f) / sy)
}

/// End-to-end chrominance BVP: S = X_f - alpha * Y_f.
pub fn chrom_bvp(t: &ChannelTrace) -> Result<BvpSignal> {
    if t.len() < 64 {
        return Err(Error::TooShort {
            needed: 64,
            got: t.len(),
        });
    }
    let pair = chrom_pair(t)?;
    let alpha = chrom_alpha(&pair.x_f, &pair.y_f)?;
    let s = pair
        .x_f
        .iter()
        .zip(&pair.y_f)
        .map(|(x, y)| x - alpha * y)
        .collect();
    BvpSignal::new(s, t.fps)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn wavy_trace(n: usize, fps: f64) -> ChannelTrace {
        let r: Vec<f64> = (0..n)
            .map(|i| 150.0 + 3.0 * (2.0 * std::f64::consts::PI * 1.3 * i as f64 / fps).sin())
            .collect();
        let g: Vec<f64> = (0..n)
            .map(|i| 110.0 + 5.0 * (2.0 * std::f64::consts::PI * 1.3 * i as f64 / fps).sin()
                + 0.8 * (2.0 * std::f64::consts::PI * 0.4 * i as f64 / fps).cos())
            .collect();
        let b: Vec<f64> = (0..n)
            .map(|i| 95.0 + 2.0 * (2.0 * std::f64::consts::PI * 1.3 * i as f64 / fps).sin()
                + 0.5 * (2.0 * std::f64::consts::PI * 2.2 * i as f64 / fps).sin())
            .collect();
        ChannelTrace::new(r, g, b, fps).unwrap()
    }

    #[test]
    fn achromatic_channels_give_unit_constants() {
        let t = ChannelTrace::new(vec![42.0; 128], vec![42.0; 128], vec![42.0; 128], 30.0).unwrap();
        let (x, y) = chrominance_xy(&t).unwrap();
        for (xi, yi) in x.iter().zip(&y) {
            assert_abs_diff_eq!(*xi, 1.0, epsilon = 1e-12);
            assert_abs_diff_eq!(*yi, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn definition_identity_holds() {
        let t = wavy_trace(256, 30.0);
        let (x, _) = chrominance_xy(&t).unwrap();
        let rn: Vec<f64> = t.r.iter().map(|v| v / crate::stats::mean(&t.r)).collect();
        let gn: Vec<f64> = t.g.iter().map(|v| v / crate::stats::mean(&t.g)).collect();
        for i in 0..x.len() {
            assert_abs_diff_eq!(x[i] + 2.0 * gn[i] - 3.0 * rn[i], 0.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn x_falls_exactly_where_normalized_g_rises() {
        // Doubling g uniformly cancels in the mean normalization, so the
        // perturbation doubles g at alternating samples instead; X must move
        // opposite to the normalized-g change, sample by sample.
        let base = wavy_trace(256, 30.0);
        let mut bumped = base.clone();
        for i in (0..bumped.g.len()).step_by(2) {
            bumped.g[i] *= 2.0;
        }
        let (x0, _) = chrominance_xy(&base).unwrap();
        let (x1, _) = chrominance_xy(&bumped).unwrap();
        let gn0: Vec<f64> = base.g.iter().map(|v| v / crate::stats::mean(&base.g)).collect();
        let gn1: Vec<f64> = bumped
            .g
            .iter()
            .map(|v| v / crate::stats::mean(&bumped.g))
            .collect();
        for i in 0..x0.len() {
            if gn1[i] > gn0[i] {
                assert!(x1[i] < x0[i], "sample {i}");
            } else if gn1[i] < gn0[i] {
                assert!(x1[i] > x0[i], "sample {i}");
            }
        }
    }

    #[test]
    fn zero_mean_channel_rejected() {
        let t = ChannelTrace::new(vec![0.0; 64], vec![10.0; 64], vec![10.0; 64], 30.0).unwrap();
        assert!(matches!(
            chrominance_xy(&t),
            Err(Error::ZeroMeanChannel("r"))
        ));
    }

    #[test]
    fn alpha_of_equal_signals_is_one() {
        let v: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        assert_abs_diff_eq!(chrom_alpha(&v, &v).unwrap(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn alpha_scales_linearly() {
        let y: Vec<f64> = (0..64).map(|i| (i as f64 * 0.3).sin()).collect();
        let x: Vec<f64> = y.iter().map(|v| 2.0 * v).collect();
        assert_abs_diff_eq!(chrom_alpha(&x, &y).unwrap(), 2.0, epsilon = 1e-12);
    }

    #[test]
    fn alpha_matches_direct_sigma_ratio() {
        let x: Vec<f64> = (0..100).map(|i| ((i * 7 % 13) as f64) - 6.0).collect();
        let y: Vec<f64> = (0..100).map(|i| ((i * 5 % 11) as f64) * 0.7 + 1.0).collect();
        let direct = crate::stats::pop_std(&x) / crate::stats::pop_std(&y);
        assert_abs_diff_eq!(chrom_alpha(&x, &y).unwrap(), direct, epsilon = 1e-12);
    }

    #[test]
    fn alpha_rejects_constant_y() {
        let x: Vec<f64> = (0..32).map(|i| i as f64).collect();
        assert!(matches!(
            chrom_alpha(&x, &vec![3.0; 32]),
            Err(Error::ZeroVariance)
        ));
    }

    #[test]
    fn achromatic_constant_trace_gives_zero_s() {
        let t = ChannelTrace::new(vec![80.0; 128], vec![80.0; 128], vec![80.0; 128], 30.0).unwrap();
        let s = chrom_bvp(&t).unwrap();
        let worst = s.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        assert!(worst < 1e-12, "residual {worst}");
    }

    #[test]
    fn short_trace_rejected() {
        let t = wavy_trace(63, 30.0);
        assert!(matches!(
            chrom_bvp(&t),
            Err(Error::TooShort { needed: 64, .. })
        ));
    }

    #[test]
    fn illumination_scaling_leaves_s_unchanged() {
        let t = wavy_trace(300, 30.0);
        let s0 = chrom_bvp(&t).unwrap();
        let scale_inf = s0.samples.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        for k in [0.5, 2.0, 10.0] {
            let scaled = ChannelTrace::new(
                t.r.iter().map(|v| v * k).collect(),
                t.g.iter().map(|v| v * k).collect(),
                t.b.iter().map(|v| v * k).collect(),
                t.fps,
            )
            .unwrap();
            let s1 = chrom_bvp(&scaled).unwrap();
            for (a, b) in s0.samples.iter().zip(&s1.samples) {
                assert!((a - b).abs() <= 1e-9 * scale_inf, "k={k}");
            }
        }
    }

    #[test]
    fn s_has_zero_mean_within_tolerance() {
        // The bandpass rejects DC exactly in steady state, but a finite window
        // keeps boundary transients whose residual mean shrinks like 1/n.
        let t = wavy_trace(600, 30.0);
        let s = chrom_bvp(&t).unwrap();
        let mean = crate::stats::mean(&s.samples);
        let std = crate::stats::pop_std(&s.samples);
        assert!(mean.abs() < 2e-2 * std.max(1e-300), "mean {mean} std {std}");

        let t_long = wavy_trace(6000, 30.0);
        let s_long = chrom_bvp(&t_long).unwrap();
        let mean_long = crate::stats::mean(&s_long.samples);
        let std_long = crate::stats::pop_std(&s_long.samples);
        assert!(mean_long.abs() < 2e-3 * std_long.max(1e-300));
    }
}
