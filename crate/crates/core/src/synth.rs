//! Synthetic ground-truth generators.
//!
//! Two families of fixtures back the test suites: color traces with a known
//! embedded pulse ([`synth_trace`]) and labeled eye-image sequences with
//! planted blinks ([`synth_eye_dataset`]). Both are seeded and bit-exactly
//! deterministic, so every derived expectation in the tests traces back to a
//! parameter of these generators rather than to a recorded run.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::blink::{EyeImage, FrameLabel};
use crate::error::{Error, Result};
use crate::trace::ChannelTrace;

/// Parameters of a synthetic color trace.
///
/// Each channel is a base skin tone modulated multiplicatively by a slow
/// illumination flicker and by the pulse, plus additive Gaussian sensor
/// noise scaled to the channel's base level:
///
/// `c(t) = base_c * (1 + flicker_amp*sin(2*pi*flicker_hz*t))
///                * (1 + pulse_amp*weight_c*sin(2*pi*pulse_hz*t))
///        + gaussian(0, noise_std * base_c)`
#[derive(Debug, Clone, PartialEq)]
pub struct SynthTraceConfig {
    /// Frame rate in Hz; must exceed twice the pulse frequency.
    pub fps: f64,
    /// Trace length in seconds; `duration_s * fps` must be at least 64.
    pub duration_s: f64,
    /// Pulse frequency in Hz, within the physiological band [0.67, 3].
    pub pulse_hz: f64,
    /// Relative pulse amplitude (>= 0).
    pub pulse_amp: f64,
    /// Mean skin tone per channel, each in (0, 255].
    pub base_rgb: [f64; 3],
    /// Relative pulsatility per channel.
    pub pulse_rgb_weights: [f64; 3],
    /// Illumination flicker frequency in Hz (>= 0).
    pub flicker_hz: f64,
    /// Relative flicker amplitude (>= 0).
    pub flicker_amp: f64,
    /// Additive noise standard deviation relative to the channel base (>= 0).
    pub noise_std: f64,
    /// RNG seed; identical configs produce bit-identical traces.
    pub seed: u64,
}

impl Default for SynthTraceConfig {
    fn default() -> Self {
        Self {
            fps: 30.0,
            duration_s: 30.0,
            pulse_hz: 1.2,
            pulse_amp: 0.05,
            base_rgb: [150.0, 110.0, 95.0],
            pulse_rgb_weights: [0.7, 1.0, 0.5],
            flicker_hz: 0.0,
            flicker_amp: 0.0,
            noise_std: 0.0,
            seed: 0,
        }
    }
}

impl SynthTraceConfig {
    /// Number of samples the trace will contain.
    pub fn num_samples(&self) -> usize {
        (self.duration_s * self.fps).round() as usize
    }

    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return fail(format!("fps must be positive, got {}", self.fps));
        }
        if !(0.67..=3.0).contains(&self.pulse_hz) {
            return fail(format!(
                "pulse_hz {} outside the physiological band [0.67, 3]",
                self.pulse_hz
            ));
        }
        if self.fps <= 2.0 * self.pulse_hz {
            return fail(format!(
                "fps {} does not exceed twice the pulse frequency {}",
                self.fps, self.pulse_hz
            ));
        }
        for (name, v) in [
            ("pulse_amp", self.pulse_amp),
            ("flicker_amp", self.flicker_amp),
            ("noise_std", self.noise_std),
            ("flicker_hz", self.flicker_hz),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return fail(format!("{name} must be non-negative, got {v}"));
            }
        }
        for base in self.base_rgb {
            if !(base > 0.0 && base <= 255.0) {
                return fail(format!("base_rgb value {base} outside (0, 255]"));
            }
        }
        if self.pulse_rgb_weights.iter().any(|w| !w.is_finite()) {
            return fail("pulse_rgb_weights must be finite".into());
        }
        if !(self.duration_s > 0.0) || self.num_samples() < 64 {
            return fail(format!(
                "duration_s {} at fps {} yields fewer than 64 samples",
                self.duration_s, self.fps
            ));
        }
        Ok(())
    }
}

/// Generates a synthetic color trace and its ground-truth heart rate in BPM.
///
/// Values are clamped to `[0, 255]` like real spatially averaged pixels.
/// Noise is drawn channel by channel (all red samples, then green, then
/// blue) from a seeded generator, so equal configs give bit-identical
/// traces.
///
/// # Errors
/// `InvalidConfig` when the configuration violates its invariants.
pub fn synth_trace(cfg: &SynthTraceConfig) -> Result<(ChannelTrace, f64)> {
    cfg.validate()?;
    let n = cfg.num_samples();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let two_pi = 2.0 * std::f64::consts::PI;
    let mut channels = Vec::with_capacity(3);
    for c in 0..3 {
        let base = cfg.base_rgb[c];
        let weight = cfg.pulse_rgb_weights[c];
        let noise = if cfg.noise_std > 0.0 {
            Some(Normal::new(0.0, cfg.noise_std * base).expect("validated std"))
        } else {
            None
        };
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / cfg.fps;
                let flicker = 1.0 + cfg.flicker_amp * (two_pi * cfg.flicker_hz * t).sin();
                let pulse = 1.0 + cfg.pulse_amp * weight * (two_pi * cfg.pulse_hz * t).sin();
                let v = base * flicker * pulse
                    + noise.as_ref().map_or(0.0, |d| d.sample(&mut rng));
                v.clamp(0.0, 255.0)
            })
            .collect();
        channels.push(samples);
    }
    let b = channels.pop().expect("three channels");
    let g = channels.pop().expect("three channels");
    let r = channels.pop().expect("three channels");
    let trace = ChannelTrace::new(r, g, b, cfg.fps)?;
    Ok((trace, 60.0 * cfg.pulse_hz))
}

/// Parameters of a synthetic eye-image sequence with planted blinks.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthBlinkConfig {
    /// Total number of frames.
    pub num_frames: usize,
    /// Closed runs as `(start, len)` pairs; must be in range, at least one
    /// frame long, and separated by at least one open frame so each span
    /// surfaces as its own blink event.
    pub blink_spans: Vec<(usize, usize)>,
    /// Gaussian pixel noise added to the rendered patterns (>= 0).
    pub image_noise_std: f64,
    /// RNG seed.
    pub seed: u64,
}

impl SynthBlinkConfig {
    fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::InvalidConfig(msg));
        if self.num_frames == 0 {
            return fail("num_frames must be at least 1".into());
        }
        if !(self.image_noise_std >= 0.0) || !self.image_noise_std.is_finite() {
            return fail(format!(
                "image_noise_std must be non-negative, got {}",
                self.image_noise_std
            ));
        }
        let mut spans = self.blink_spans.clone();
        spans.sort_unstable();
        for (i, (start, len)) in spans.iter().enumerate() {
            if *len == 0 {
                return fail(format!("blink span at frame {start} has zero length"));
            }
            if start + len > self.num_frames {
                return fail(format!(
                    "blink span ({start}, {len}) exceeds {} frames",
                    self.num_frames
                ));
            }
            if i + 1 < spans.len() && start + len >= spans[i + 1].0 {
                return fail(format!(
                    "blink span ({start}, {len}) touches span at {}",
                    spans[i + 1].0
                ));
            }
        }
        Ok(())
    }
}

/// The canonical open-eye rendering: a bright horizontal band (sclera and
/// iris region) over a dark background.
pub fn open_eye_pattern() -> EyeImage {
    pattern(|row| if (8..16).contains(&row) { 220.0 } else { 30.0 })
}

/// The canonical closed-eye rendering: a thin dark lash line over a bright
/// lid-colored background.
pub fn closed_eye_pattern() -> EyeImage {
    pattern(|row| if (11..13).contains(&row) { 15.0 } else { 180.0 })
}

fn pattern(level: impl Fn(usize) -> f64) -> EyeImage {
    let pixels = (0..EyeImage::DIM)
        .map(|i| level(i / EyeImage::SIDE))
        .collect();
    EyeImage::from_pixels(pixels).expect("patterns are in range")
}

fn noisy_pattern(base: &EyeImage, noise: Option<&Normal<f64>>, rng: &mut ChaCha8Rng) -> EyeImage {
    let pixels = base
        .pixels()
        .iter()
        .map(|p| {
            (p + noise.map_or(0.0, |d| d.sample(rng))).clamp(0.0, 255.0)
        })
        .collect();
    EyeImage::from_pixels(pixels).expect("clamped to range")
}

/// Renders an eye-image sequence with Closed frames on the configured spans
/// and Open frames elsewhere, plus the matching ground-truth labels.
///
/// # Errors
/// `InvalidConfig` when the configuration violates its invariants.
pub fn synth_eye_dataset(cfg: &SynthBlinkConfig) -> Result<(Vec<EyeImage>, Vec<FrameLabel>)> {
    cfg.validate()?;
    let mut labels = vec![FrameLabel::Open; cfg.num_frames];
    for (start, len) in &cfg.blink_spans {
        for label in labels.iter_mut().skip(*start).take(*len) {
            *label = FrameLabel::Closed;
        }
    }
    let open = open_eye_pattern();
    let closed = closed_eye_pattern();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let noise = if cfg.image_noise_std > 0.0 {
        Some(Normal::new(0.0, cfg.image_noise_std).expect("validated std"))
    } else {
        None
    };
    let images = labels
        .iter()
        .map(|label| {
            let base = match label {
                FrameLabel::Closed => &closed,
                _ => &open,
            };
            noisy_pattern(base, noise.as_ref(), &mut rng)
        })
        .collect();
    Ok((images, labels))
}

/// Draws a labeled training set: `n_per_class` noisy open images followed by
/// the same number of closed ones, from one seeded generator.
///
/// # Errors
/// `InvalidConfig` for an empty class or a negative/non-finite noise level.
pub fn synth_labeled_images(
    n_per_class: usize,
    noise_std: f64,
    seed: u64,
) -> Result<(Vec<EyeImage>, Vec<EyeImage>)> {
    if n_per_class == 0 {
        return Err(Error::InvalidConfig("n_per_class must be at least 1".into()));
    }
    if !(noise_std >= 0.0) || !noise_std.is_finite() {
        return Err(Error::InvalidConfig(format!(
            "noise_std must be non-negative, got {noise_std}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = if noise_std > 0.0 {
        Some(Normal::new(0.0, noise_std).expect("validated std"))
    } else {
        None
    };
    let open_base = open_eye_pattern();
    let closed_base = closed_eye_pattern();
    let open = (0..n_per_class)
        .map(|_| noisy_pattern(&open_base, noise.as_ref(), &mut rng))
        .collect();
    let closed = (0..n_per_class)
        .map(|_| noisy_pattern(&closed_base, noise.as_ref(), &mut rng))
        .collect();
    Ok((open, closed))
}

/// Plans non-overlapping blink spans for a sequence: `count` runs with
/// lengths drawn uniformly from `[min_len, max_len]`, separated (and
/// bounded on both ends) by gaps of at least `min_gap` open frames, with the
/// remaining slack spread across the gaps by seeded draws.
///
/// # Errors
/// `InvalidConfig` when the parameters are degenerate or the spans cannot
/// fit in `num_frames`.
pub fn plan_blink_spans(
    num_frames: usize,
    count: usize,
    min_len: usize,
    max_len: usize,
    min_gap: usize,
    seed: u64,
) -> Result<Vec<(usize, usize)>> {
    if count == 0 || min_len == 0 || min_len > max_len || min_gap == 0 {
        return Err(Error::InvalidConfig(format!(
            "degenerate span plan: count {count}, len [{min_len}, {max_len}], gap {min_gap}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lens: Vec<usize> = (0..count)
        .map(|_| rng.random_range(min_len..=max_len))
        .collect();
    let total_len: usize = lens.iter().sum();
    let reserved = total_len + min_gap * (count + 1);
    if reserved > num_frames {
        return Err(Error::InvalidConfig(format!(
            "{count} spans need at least {reserved} frames, have {num_frames}"
        )));
    }
    let slack = num_frames - reserved;
    let weights: Vec<u64> = (0..count + 1).map(|_| rng.random_range(1..=1000)).collect();
    let weight_sum: u64 = weights.iter().sum();
    let mut gaps: Vec<usize> = weights
        .iter()
        .map(|w| min_gap + (slack as u64 * w / weight_sum) as usize)
        .collect();
    let used: usize = gaps.iter().sum::<usize>() + total_len;
    *gaps.last_mut().expect("count+1 gaps") += num_frames - used;

    let mut spans = Vec::with_capacity(count);
    let mut pos = gaps[0];
    for (len, gap) in lens.iter().zip(&gaps[1..]) {
        spans.push((pos, *len));
        pos += len + gap;
    }
    Ok(spans)
}
