//! `blink-train` and `blink-run`: classifier training from a labeled eye
//! dataset and streaming per-frame classification with a blink-event table.

use crate::error::{CliError, CliResult};
use clap::Args;
use pulsegaze::blink::{
    accuracy, blink_events, fit_lda, fit_mlp, fit_pca, postprocess_labels, preprocess_eye,
    BlinkModel, EyeImage, FrameLabel,
};
use pulsegaze::io::{load_blink_model, read_eye_dataset, read_eye_sequence, save_blink_model};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Dataset directory: PGM eye images plus a `labels.csv` manifest.
    #[arg(long)]
    pub data: PathBuf,
    /// Where to write the trained model file.
    #[arg(long)]
    pub out: PathBuf,
    /// Number of eigenimages retained before the discriminant (1 gives the
    /// single strongest component).
    #[arg(long, default_value_t = 100)]
    pub k: usize,
    /// Train the neural network instead of the eigenimage discriminant.
    #[arg(long)]
    pub mlp: bool,
    /// Training epochs for `--mlp`.
    #[arg(long, default_value_t = 500)]
    pub epochs: usize,
    /// Learning rate for `--mlp`.
    #[arg(long, default_value_t = 0.5)]
    pub lr: f64,
    /// Weight-initialization seed for `--mlp`.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

fn split_classes(
    images: &[EyeImage],
    labels: &[FrameLabel],
) -> (Vec<EyeImage>, Vec<EyeImage>) {
    let mut open = Vec::new();
    let mut closed = Vec::new();
    for (img, label) in images.iter().zip(labels) {
        match label {
            FrameLabel::Open => open.push(preprocess_eye(img)),
            FrameLabel::Closed => closed.push(preprocess_eye(img)),
            FrameLabel::NoEye => {}
        }
    }
    (open, closed)
}

pub fn run_train(args: &TrainArgs) -> CliResult<()> {
    let (images, labels) = read_eye_dataset(&args.data)?;
    let (open, closed) = split_classes(&images, &labels);

    let model = if args.mlp {
        BlinkModel::Mlp(fit_mlp(&open, &closed, args.epochs, args.lr, args.seed)?)
    } else {
        let mut all = open.clone();
        all.extend(closed.iter().cloned());
        let basis = fit_pca(&all, args.k)?;
        BlinkModel::Lda(fit_lda(basis, &open, &closed)?)
    };
    save_blink_model(&args.out, &model)?;

    let mut counts = (0usize, 0usize, 0usize, 0usize);
    for img in &open {
        match model.classify(img).0 {
            FrameLabel::Open => counts.0 += 1,
            _ => counts.1 += 1,
        }
    }
    for img in &closed {
        match model.classify(img).0 {
            FrameLabel::Closed => counts.2 += 1,
            _ => counts.3 += 1,
        }
    }
    let train_acc = accuracy(counts)?;

    println!("model,{}", model.kind());
    println!("images,{}", open.len() + closed.len());
    println!("training_accuracy,{train_acc:.3}");
    Ok(())
}

#[derive(Args, Debug)]
pub struct RunArgs {
    /// Trained model file from `blink-train`.
    #[arg(long)]
    pub model: PathBuf,
    /// Directory of PGM eye frames (optionally with a `sequence.csv`
    /// manifest; rows with an empty file column mean no eye was detected).
    #[arg(long)]
    pub data: PathBuf,
    /// Frame rate used to convert blink durations to seconds.
    #[arg(long, default_value_t = 30.0)]
    pub fps: f64,
}

pub fn run_run(args: &RunArgs) -> CliResult<()> {
    let model = load_blink_model(&args.model)?;
    let frames = read_eye_sequence(&args.data)?;
    if frames.is_empty() {
        return Err(CliError::Data(format!(
            "InvalidData: no frames in {}",
            args.data.display()
        )));
    }

    let mut labels = Vec::with_capacity(frames.len());
    let mut scores = Vec::with_capacity(frames.len());
    for frame in &frames {
        match frame {
            Some(img) => {
                let (label, score) = model.classify(&preprocess_eye(img));
                labels.push(label);
                scores.push(score);
            }
            None => {
                labels.push(FrameLabel::NoEye);
                scores.push(0.0);
            }
        }
    }
    let labels = postprocess_labels(&labels);
    for (i, (label, score)) in labels.iter().zip(&scores).enumerate() {
        println!("{i},{label},{score:.6}");
    }

    let timeline = blink_events(&labels, args.fps)?;
    println!("events,{}", timeline.events.len());
    println!("event,start_frame,end_frame,frames,seconds");
    for (k, event) in timeline.events.iter().enumerate() {
        println!(
            "{},{},{},{},{:.6}",
            k + 1,
            event.start_frame,
            event.end_frame,
            event.duration_frames,
            event.duration_s
        );
    }
    Ok(())
}
