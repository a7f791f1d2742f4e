//! Small feedforward classifier for open/closed eye crops.
//!
//! The network is fixed at 576-16-1: a tanh hidden layer over the flattened
//! pixels scaled to `[0, 1]`, and a logistic output giving the probability
//! that the eye is closed. Training is plain full-batch gradient descent on
//! the mean binary cross-entropy, deterministic for a given seed. The loss
//! and gradients are computed through a softplus formulation so saturated
//! outputs do not produce infinities prematurely.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::blink::image::EyeImage;
use crate::blink::serial::{parse_tagged_floats, push_tagged_floats};
use crate::blink::FrameLabel;
use crate::error::{Error, Result};

/// Input dimension (24x24 pixels).
pub const MLP_INPUT: usize = 576;
/// Hidden layer width.
pub const MLP_HIDDEN: usize = 16;

/// Trained network parameters plus the final training loss.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    /// Hidden-layer weights, `MLP_HIDDEN` rows of `MLP_INPUT` values.
    pub w1: Vec<Vec<f64>>,
    /// Hidden-layer biases.
    pub b1: Vec<f64>,
    /// Output weights, one per hidden unit.
    pub w2: Vec<f64>,
    /// Output bias.
    pub b2: f64,
    /// Mean binary cross-entropy over the training set after the last step.
    pub final_loss: f64,
}

/// Gradients of the mean training loss with respect to every parameter,
/// shaped exactly like [`MlpModel`].
#[derive(Debug, Clone)]
pub struct MlpGradients {
    pub w1: Vec<Vec<f64>>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
}

impl MlpModel {
    fn validate(&self) -> Result<()> {
        let shape_ok = self.w1.len() == MLP_HIDDEN
            && self.w1.iter().all(|r| r.len() == MLP_INPUT)
            && self.b1.len() == MLP_HIDDEN
            && self.w2.len() == MLP_HIDDEN;
        if !shape_ok {
            return Err(Error::InvalidData("mlp parameter shapes inconsistent".into()));
        }
        let finite = self
            .w1
            .iter()
            .flatten()
            .chain(&self.b1)
            .chain(&self.w2)
            .chain([&self.b2, &self.final_loss])
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidData("mlp parameters must be finite".into()));
        }
        Ok(())
    }

    /// Pre-activation output for scaled inputs.
    fn raw_output(&self, x: &[f64]) -> f64 {
        let mut z2 = self.b2;
        for (row, (b, w2)) in self.w1.iter().zip(self.b1.iter().zip(&self.w2)) {
            let z1: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
            z2 += w2 * z1.tanh();
        }
        z2
    }

    /// Line-oriented text form; floats carry enough digits for a bit-exact
    /// round trip.
    pub fn to_text(&self) -> String {
        let mut out = String::from("pulsegaze-model v1 mlp\n");
        out.push_str(&format!("dims {MLP_INPUT} {MLP_HIDDEN} 1\n"));
        for row in &self.w1 {
            push_tagged_floats(&mut out, "w1", row);
        }
        push_tagged_floats(&mut out, "b1", &self.b1);
        push_tagged_floats(&mut out, "w2", &self.w2);
        push_tagged_floats(&mut out, "b2", &[self.b2]);
        push_tagged_floats(&mut out, "final_loss", &[self.final_loss]);
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut lines = text.lines();
        let header = lines.next().unwrap_or("");
        if header.trim() != "pulsegaze-model v1 mlp" {
            return Err(Error::InvalidData(format!(
                "unexpected mlp header: {header:?}"
            )));
        }
        let dims = lines.next().unwrap_or("");
        if dims.trim() != format!("dims {MLP_INPUT} {MLP_HIDDEN} 1") {
            return Err(Error::InvalidData(format!("unexpected dims line: {dims:?}")));
        }
        let mut w1 = Vec::with_capacity(MLP_HIDDEN);
        for _ in 0..MLP_HIDDEN {
            w1.push(parse_tagged_floats(lines.next(), "w1", MLP_INPUT)?);
        }
        let b1 = parse_tagged_floats(lines.next(), "b1", MLP_HIDDEN)?;
        let w2 = parse_tagged_floats(lines.next(), "w2", MLP_HIDDEN)?;
        let b2 = parse_tagged_floats(lines.next(), "b2", 1)?[0];
        let final_loss = parse_tagged_floats(lines.next(), "final_loss", 1)?[0];
        let model = Self {
            w1,
            b1,
            w2,
            b2,
            final_loss,
        };
        model.validate()?;
        Ok(model)
    }
}

/// ln(1 + e^z) computed without overflow for large |z|.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn logistic(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

/// Scaled training matrix plus targets (Open -> 0, Closed -> 1).
fn training_set(open: &[EyeImage], closed: &[EyeImage]) -> (Vec<Vec<f64>>, Vec<f64>) {
    let mut xs = Vec::with_capacity(open.len() + closed.len());
    let mut ys = Vec::with_capacity(open.len() + closed.len());
    for (imgs, y) in [(open, 0.0), (closed, 1.0)] {
        for img in imgs {
            xs.push(img.pixels().iter().map(|p| p / 255.0).collect());
            ys.push(y);
        }
    }
    (xs, ys)
}

fn loss_and_gradients_inner(
    model: &MlpModel,
    xs: &[Vec<f64>],
    ys: &[f64],
) -> (f64, MlpGradients) {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut g = MlpGradients {
        w1: vec![vec![0.0; MLP_INPUT]; MLP_HIDDEN],
        b1: vec![0.0; MLP_HIDDEN],
        w2: vec![0.0; MLP_HIDDEN],
        b2: 0.0,
    };
    let mut hidden = vec![0.0; MLP_HIDDEN];
    for (x, y) in xs.iter().zip(ys) {
        let mut z2 = model.b2;
        for (j, (row, (b, w2))) in model
            .w1
            .iter()
            .zip(model.b1.iter().zip(&model.w2))
            .enumerate()
        {
            let z1: f64 = row.iter().zip(x).map(|(w, xi)| w * xi).sum::<f64>() + b;
            hidden[j] = z1.tanh();
            z2 += w2 * hidden[j];
        }
        loss += softplus(z2) - y * z2;
        let dz2 = (logistic(z2) - y) / n;
        g.b2 += dz2;
        for j in 0..MLP_HIDDEN {
            g.w2[j] += dz2 * hidden[j];
            let dz1 = dz2 * model.w2[j] * (1.0 - hidden[j] * hidden[j]);
            g.b1[j] += dz1;
            let grow = &mut g.w1[j];
            for (gi, xi) in grow.iter_mut().zip(x) {
                *gi += dz1 * xi;
            }
        }
    }
    (loss / n, g)
}

/// Mean binary cross-entropy of the model over a labeled image set.
///
/// # Errors
/// `EmptyInput` when both classes are empty.
pub fn mlp_loss(model: &MlpModel, open: &[EyeImage], closed: &[EyeImage]) -> Result<f64> {
    let (loss, _) = mlp_loss_and_gradient(model, open, closed)?;
    Ok(loss)
}

/// Mean binary cross-entropy together with its analytic gradient.
///
/// # Errors
/// `EmptyInput` when both classes are empty.
pub fn mlp_loss_and_gradient(
    model: &MlpModel,
    open: &[EyeImage],
    closed: &[EyeImage],
) -> Result<(f64, MlpGradients)> {
    if open.is_empty() && closed.is_empty() {
        return Err(Error::EmptyInput("mlp training set"));
    }
    let (xs, ys) = training_set(open, closed);
    Ok(loss_and_gradients_inner(model, &xs, &ys))
}

/// Deterministic seeded initialization: uniform weights within the
/// per-layer limit `sqrt(6 / (fan_in + fan_out))`, zero biases.
fn init_model(seed: u64) -> MlpModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let lim1 = (6.0 / (MLP_INPUT + MLP_HIDDEN) as f64).sqrt();
    let w1 = (0..MLP_HIDDEN)
        .map(|_| (0..MLP_INPUT).map(|_| rng.random_range(-lim1..lim1)).collect())
        .collect();
    let lim2 = (6.0 / (MLP_HIDDEN + 1) as f64).sqrt();
    let w2 = (0..MLP_HIDDEN).map(|_| rng.random_range(-lim2..lim2)).collect();
    MlpModel {
        w1,
        b1: vec![0.0; MLP_HIDDEN],
        w2,
        b2: 0.0,
        final_loss: f64::NAN,
    }
}

/// Trains the network by full-batch gradient descent.
///
/// # Errors
/// `TooFewImages` if either class has fewer than 2 images; `NonFiniteLoss`
/// if the loss stops being finite (learning rate too high).
pub fn fit_mlp(
    open: &[EyeImage],
    closed: &[EyeImage],
    epochs: usize,
    lr: f64,
    seed: u64,
) -> Result<MlpModel> {
    for class in [open, closed] {
        if class.len() < 2 {
            return Err(Error::TooFewImages {
                needed: 2,
                got: class.len(),
            });
        }
    }
    let (xs, ys) = training_set(open, closed);
    let mut model = init_model(seed);
    for epoch in 0..epochs {
        let (loss, g) = loss_and_gradients_inner(&model, &xs, &ys);
        if !loss.is_finite() {
            return Err(Error::NonFiniteLoss { epoch, loss });
        }
        for (row, grow) in model.w1.iter_mut().zip(&g.w1) {
            for (w, gw) in row.iter_mut().zip(grow) {
                *w -= lr * gw;
            }
        }
        for (b, gb) in model.b1.iter_mut().zip(&g.b1) {
            *b -= lr * gb;
        }
        for (w, gw) in model.w2.iter_mut().zip(&g.w2) {
            *w -= lr * gw;
        }
        model.b2 -= lr * g.b2;
    }
    let (final_loss, _) = loss_and_gradients_inner(&model, &xs, &ys);
    if !final_loss.is_finite() {
        return Err(Error::NonFiniteLoss {
            epoch: epochs,
            loss: final_loss,
        });
    }
    model.final_loss = final_loss;
    Ok(model)
}

/// Runs the network on one image.
///
/// Returns the label and the closed-eye probability; Closed exactly when the
/// probability strictly exceeds 0.5, so a 0.5 output maps to Open.
pub fn classify_mlp(model: &MlpModel, img: &EyeImage) -> (FrameLabel, f64) {
    let x: Vec<f64> = img.pixels().iter().map(|p| p / 255.0).collect();
    let prob = logistic(model.raw_output(&x));
    let label = if prob > 0.5 {
        FrameLabel::Closed
    } else {
        FrameLabel::Open
    };
    (label, prob)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn patterned_classes(n: usize, noise: f64, seed: u64) -> (Vec<EyeImage>, Vec<EyeImage>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = move || -> f64 {
            let u1: f64 = rng.random_range(1e-12..1.0);
            let u2: f64 = rng.random_range(0.0..1.0);
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let render = |f: &dyn Fn(usize, usize) -> f64, g: &mut dyn FnMut() -> f64| {
            let pixels: Vec<f64> = (0..EyeImage::DIM)
                .map(|i| {
                    let (r, c) = (i / EyeImage::SIDE, i % EyeImage::SIDE);
                    (f(r, c) + noise * g()).clamp(0.0, 255.0)
                })
                .collect();
            EyeImage::from_pixels(pixels).unwrap()
        };
        let open = (0..n)
            .map(|_| render(&|r, _| if (8..16).contains(&r) { 220.0 } else { 30.0 }, &mut gauss))
            .collect();
        let closed = (0..n)
            .map(|_| render(&|r, _| if (11..13).contains(&r) { 15.0 } else { 180.0 }, &mut gauss))
            .collect();
        (open, closed)
    }

    #[test]
    fn separable_classes_reach_high_training_accuracy() {
        let (open, closed) = patterned_classes(25, 8.0, 7);
        let model = fit_mlp(&open, &closed, 500, 0.5, 1).unwrap();
        let mut correct = 0usize;
        for img in &open {
            correct += usize::from(classify_mlp(&model, img).0 == FrameLabel::Open);
        }
        for img in &closed {
            correct += usize::from(classify_mlp(&model, img).0 == FrameLabel::Closed);
        }
        assert!(correct as f64 / 50.0 >= 0.98, "correct {correct}/50");
        assert!(model.final_loss < 0.1);
    }

    #[test]
    fn held_out_accuracy_at_least_95_percent() {
        let (open, closed) = patterned_classes(25, 8.0, 7);
        let model = fit_mlp(&open, &closed, 500, 0.5, 1).unwrap();
        let (open_h, closed_h) = patterned_classes(40, 8.0, 99);
        let mut correct = 0usize;
        for img in &open_h {
            correct += usize::from(classify_mlp(&model, img).0 == FrameLabel::Open);
        }
        for img in &closed_h {
            correct += usize::from(classify_mlp(&model, img).0 == FrameLabel::Closed);
        }
        assert!(correct as f64 / 80.0 >= 0.95, "correct {correct}/80");
    }

    #[test]
    fn zero_learning_rate_leaves_parameters_at_init() {
        let (open, closed) = patterned_classes(3, 5.0, 2);
        let zero_steps = fit_mlp(&open, &closed, 0, 0.5, 11).unwrap();
        let no_motion = fit_mlp(&open, &closed, 50, 0.0, 11).unwrap();
        assert_eq!(zero_steps.w1, no_motion.w1);
        assert_eq!(zero_steps.b1, no_motion.b1);
        assert_eq!(zero_steps.w2, no_motion.w2);
        assert_eq!(zero_steps.b2, no_motion.b2);
    }

    #[test]
    fn training_is_deterministic_per_seed() {
        let (open, closed) = patterned_classes(5, 5.0, 3);
        let a = fit_mlp(&open, &closed, 40, 0.5, 4).unwrap();
        let b = fit_mlp(&open, &closed, 40, 0.5, 4).unwrap();
        assert_eq!(a, b);
        let c = fit_mlp(&open, &closed, 40, 0.5, 5).unwrap();
        assert_ne!(a.w1, c.w1);
    }

    #[test]
    fn analytic_gradient_matches_finite_differences() {
        let (open, closed) = patterned_classes(4, 6.0, 13);
        let model = init_model(21);
        let (_, g) = mlp_loss_and_gradient(&model, &open, &closed).unwrap();
        let eps = 1e-5;
        // A fixed sample of parameters across all four tensors.
        let picks: [(usize, usize, usize); 7] = [
            (0, 0, 0),
            (0, 7, 311),
            (0, 15, 575),
            (1, 3, 0),
            (2, 0, 0),
            (2, 12, 0),
            (3, 0, 0),
        ];
        for (tensor, i, j) in picks {
            let mut plus = model.clone();
            let mut minus = model.clone();
            let analytic = match tensor {
                0 => {
                    plus.w1[i][j] += eps;
                    minus.w1[i][j] -= eps;
                    g.w1[i][j]
                }
                1 => {
                    plus.b1[i] += eps;
                    minus.b1[i] -= eps;
                    g.b1[i]
                }
                2 => {
                    plus.w2[i] += eps;
                    minus.w2[i] -= eps;
                    g.w2[i]
                }
                _ => {
                    plus.b2 += eps;
                    minus.b2 -= eps;
                    g.b2
                }
            };
            let lp = mlp_loss(&plus, &open, &closed).unwrap();
            let lm = mlp_loss(&minus, &open, &closed).unwrap();
            let fd = (lp - lm) / (2.0 * eps);
            let rel = (fd - analytic).abs() / fd.abs().max(analytic.abs()).max(1e-12);
            assert!(rel <= 1e-4, "tensor {tensor} ({i},{j}): rel err {rel}");
        }
    }

    #[test]
    fn absurd_learning_rate_reports_non_finite_loss() {
        let (open, closed) = crate::synth::synth_labeled_images(3, 5.0, 2).unwrap();
        assert!(matches!(
            fit_mlp(&open, &closed, 50, 1e308, 1),
            Err(Error::NonFiniteLoss { .. })
        ));
    }

    #[test]
    fn zero_weight_network_outputs_logistic_of_bias() {
        let model = MlpModel {
            w1: vec![vec![0.0; MLP_INPUT]; MLP_HIDDEN],
            b1: vec![0.0; MLP_HIDDEN],
            w2: vec![0.0; MLP_HIDDEN],
            b2: 0.3,
            final_loss: 0.0,
        };
        let img = EyeImage::from_pixels(vec![0.0; EyeImage::DIM]).unwrap();
        let (label, prob) = classify_mlp(&model, &img);
        assert!((prob - logistic(0.3)).abs() < 1e-15);
        assert_eq!(label, FrameLabel::Closed);
    }

    #[test]
    fn probability_half_maps_to_open() {
        let model = MlpModel {
            w1: vec![vec![0.0; MLP_INPUT]; MLP_HIDDEN],
            b1: vec![0.0; MLP_HIDDEN],
            w2: vec![0.0; MLP_HIDDEN],
            b2: 0.0,
            final_loss: 0.0,
        };
        let img = EyeImage::from_pixels(vec![128.0; EyeImage::DIM]).unwrap();
        let (label, prob) = classify_mlp(&model, &img);
        assert_eq!(prob, 0.5);
        assert_eq!(label, FrameLabel::Open);
    }

    #[test]
    fn text_round_trip_is_bit_exact() {
        let (open, closed) = patterned_classes(3, 5.0, 2);
        let model = fit_mlp(&open, &closed, 30, 0.5, 9).unwrap();
        let text = model.to_text();
        let back = MlpModel::from_text(&text).unwrap();
        assert_eq!(model, back);
        assert_eq!(text, back.to_text());
    }
}
