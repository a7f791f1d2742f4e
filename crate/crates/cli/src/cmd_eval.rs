//! `eval`: runs a declared suite of (truth, input) rows and prints a summary
//! table with Med., Std.Dev. and Error columns plus an Avg. row, and a
//! confusion/accuracy block for blink rows.
//!
//! The suite file is line-oriented (`#` comments allowed); fields are
//! comma-separated and paths resolve against the suite file's directory:
//!
//! - `fixture,<truth_bpm>,<median_bpm>,<std_bpm>` - precomputed statistics,
//!   echoed into the table (reproduces published error columns).
//! - `hr,<truth_bpm>,<method>,<manifest>` - runs the windowed estimator.
//! - `blink,<model>,<dataset_dir>` - classifies a labeled dataset and
//!   reports the confusion counts and accuracy.

use crate::error::{CliError, CliResult};
use crate::manifest::Manifest;
use clap::Args;
use pulsegaze::blink::{accuracy, preprocess_eye, FrameLabel};
use pulsegaze::hr::{
    error_summary, round_half_away_from_zero, windowed_hr, HrEstimate, HrMethod, HrSeries,
};
use pulsegaze::io::{load_blink_model, read_eye_dataset};
use std::path::{Path, PathBuf};

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Suite file declaring the rows to evaluate.
    #[arg(long)]
    pub suite: PathBuf,
    /// Exit with an error when any row fails to produce an estimate.
    #[arg(long)]
    pub strict: bool,
    /// Seed forwarded to seeded estimators.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

enum HrRow {
    /// truth, median, std, already computed elsewhere.
    Fixture(f64, f64, f64),
    /// truth, method, manifest path.
    Run(f64, HrMethod, PathBuf),
}

struct BlinkRow {
    model: PathBuf,
    data: PathBuf,
}

fn parse_suite(text: &str, base: &Path) -> CliResult<(Vec<HrRow>, Vec<BlinkRow>)> {
    let mut hr_rows = Vec::new();
    let mut blink_rows = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        let usage = |msg: String| CliError::Usage(format!("line {}: {msg}", lineno + 1));
        let number = |v: &str, what: &str| -> CliResult<f64> {
            v.parse::<f64>()
                .map_err(|e| usage(format!("cannot parse {what} {v:?}: {e}")))
        };
        match fields[0] {
            "fixture" => {
                if fields.len() != 4 {
                    return Err(usage("fixture rows take truth,median,std".into()));
                }
                hr_rows.push(HrRow::Fixture(
                    number(fields[1], "truth")?,
                    number(fields[2], "median")?,
                    number(fields[3], "std")?,
                ));
            }
            "hr" => {
                if fields.len() != 4 {
                    return Err(usage("hr rows take truth,method,manifest".into()));
                }
                hr_rows.push(HrRow::Run(
                    number(fields[1], "truth")?,
                    fields[2].parse::<HrMethod>()?,
                    base.join(fields[3]),
                ));
            }
            "blink" => {
                if fields.len() != 3 {
                    return Err(usage("blink rows take model,dataset_dir".into()));
                }
                blink_rows.push(BlinkRow {
                    model: base.join(fields[1]),
                    data: base.join(fields[2]),
                });
            }
            other => return Err(usage(format!("unknown row kind {other:?}"))),
        }
    }
    Ok((hr_rows, blink_rows))
}

fn fixture_series(median: f64, std: f64) -> HrSeries {
    let mut series = HrSeries::from_estimates(
        vec![HrEstimate {
            bpm: median,
            peak_mag: 1.0,
            window_start: 0,
            window_len: 0,
        }],
        0,
    )
    .expect("one estimate is never empty");
    series.std_bpm = std;
    series
}

pub fn run(args: &EvalArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.suite).map_err(|e| {
        CliError::Data(format!("Io: cannot read suite {}: {e}", args.suite.display()))
    })?;
    let base = args.suite.parent().unwrap_or(Path::new("."));
    let (hr_rows, blink_rows) = parse_suite(&text, base)?;

    let mut failures: Vec<String> = Vec::new();

    if !hr_rows.is_empty() {
        println!("row,truth,med,std,error");
        let mut summary_rows: Vec<(f64, HrSeries)> = Vec::new();
        for (i, row) in hr_rows.iter().enumerate() {
            let (truth, outcome) = match row {
                HrRow::Fixture(truth, median, std) => {
                    (*truth, Ok(fixture_series(*median, *std)))
                }
                HrRow::Run(truth, method, manifest) => {
                    let result = Manifest::load(manifest)
                        .and_then(|m| m.load_trace())
                        .and_then(|t| Ok(windowed_hr(&t, *method, args.seed)?));
                    (*truth, result)
                }
            };
            match outcome {
                Ok(series) => {
                    println!(
                        "{},{:.2},{:.2},{:.2},{:.2}",
                        i + 1,
                        truth,
                        series.median_bpm,
                        series.std_bpm,
                        (truth - series.median_bpm).abs()
                    );
                    summary_rows.push((truth, series));
                }
                Err(e) => {
                    println!("{},{:.2},failed,failed,failed", i + 1, truth);
                    failures.push(format!("hr row {}: {e}", i + 1));
                }
            }
        }
        if !summary_rows.is_empty() {
            let (_, mean_error) = error_summary(&summary_rows)?;
            println!(
                "avg,{:.2},{}",
                mean_error,
                round_half_away_from_zero(mean_error)
            );
        }
    }

    if !blink_rows.is_empty() {
        println!("blink,open_correct,open_wrong,closed_correct,closed_wrong,accuracy");
        for (i, row) in blink_rows.iter().enumerate() {
            let outcome = (|| -> CliResult<(usize, usize, usize, usize)> {
                let model = load_blink_model(&row.model)?;
                let (images, labels) = read_eye_dataset(&row.data)?;
                let mut counts = (0usize, 0usize, 0usize, 0usize);
                for (img, label) in images.iter().zip(&labels) {
                    let predicted = model.classify(&preprocess_eye(img)).0;
                    match (label, predicted) {
                        (FrameLabel::Open, FrameLabel::Open) => counts.0 += 1,
                        (FrameLabel::Open, _) => counts.1 += 1,
                        (FrameLabel::Closed, FrameLabel::Closed) => counts.2 += 1,
                        (FrameLabel::Closed, _) => counts.3 += 1,
                        (FrameLabel::NoEye, _) => {}
                    }
                }
                Ok(counts)
            })();
            match outcome {
                Ok(counts) => {
                    let acc = accuracy(counts)?;
                    println!(
                        "{},{},{},{},{},{:.3}",
                        i + 1,
                        counts.0,
                        counts.1,
                        counts.2,
                        counts.3,
                        acc
                    );
                }
                Err(e) => {
                    println!("{},failed,failed,failed,failed,failed", i + 1);
                    failures.push(format!("blink row {}: {e}", i + 1));
                }
            }
        }
    }

    if args.strict && !failures.is_empty() {
        return Err(CliError::Data(failures.join("; ")));
    }
    Ok(())
}
