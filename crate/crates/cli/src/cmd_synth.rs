//! `synth`: seeded synthetic fixtures with printed ground truth, either a
//! color trace CSV or a labeled PGM eye-image dataset.
//!
//! The config file is `key = value` text with a `kind` selector:
//!
//! - `kind = trace` accepts `fps`, `duration_s`, `pulse_hz`, `pulse_amp`,
//!   `base_rgb = r,g,b`, `pulse_rgb_weights = r,g,b`, `flicker_hz`,
//!   `flicker_amp`, `noise_std`, `seed` (all optional) and writes `--out`.
//! - `kind = blinks` accepts `num_frames` (required), `noise_std`, `seed`,
//!   and exactly one of `spans = start:len;start:len;...` or
//!   `plan = count,min_len,max_len,min_gap`, and writes `--out-dir`.

use crate::error::{CliError, CliResult};
use crate::keyval::{parse_fields, KeyVals};
use clap::Args;
use pulsegaze::io::{write_eye_dataset, write_trace_csv};
use pulsegaze::synth::{
    plan_blink_spans, synth_eye_dataset, synth_trace, SynthBlinkConfig, SynthTraceConfig,
};
use std::path::PathBuf;

#[derive(Args, Debug)]
pub struct SynthArgs {
    /// Generator configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV path (trace configs).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Output dataset directory (blink configs).
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

fn synth_trace_cmd(mut kv: KeyVals, args: &SynthArgs) -> CliResult<()> {
    let mut cfg = SynthTraceConfig::default();
    if let Some(v) = kv.take_parsed("fps")? {
        cfg.fps = v;
    }
    if let Some(v) = kv.take_parsed("duration_s")? {
        cfg.duration_s = v;
    }
    if let Some(v) = kv.take_parsed("pulse_hz")? {
        cfg.pulse_hz = v;
    }
    if let Some(v) = kv.take_parsed("pulse_amp")? {
        cfg.pulse_amp = v;
    }
    if let Some(raw) = kv.take("base_rgb") {
        let f = parse_fields::<f64>(&raw, 3, "base_rgb")?;
        cfg.base_rgb = [f[0], f[1], f[2]];
    }
    if let Some(raw) = kv.take("pulse_rgb_weights") {
        let f = parse_fields::<f64>(&raw, 3, "pulse_rgb_weights")?;
        cfg.pulse_rgb_weights = [f[0], f[1], f[2]];
    }
    if let Some(v) = kv.take_parsed("flicker_hz")? {
        cfg.flicker_hz = v;
    }
    if let Some(v) = kv.take_parsed("flicker_amp")? {
        cfg.flicker_amp = v;
    }
    if let Some(v) = kv.take_parsed("noise_std")? {
        cfg.noise_std = v;
    }
    if let Some(v) = kv.take_parsed("seed")? {
        cfg.seed = v;
    }
    kv.finish()?;

    let out = args.out.as_ref().ok_or_else(|| {
        CliError::Usage("trace synthesis needs --out <csv path>".into())
    })?;
    let (trace, truth_bpm) = synth_trace(&cfg)?;
    write_trace_csv(out, &trace)?;
    println!("kind,trace");
    println!("samples,{}", trace.len());
    println!("fps,{:.6}", trace.fps);
    println!("truth_bpm,{truth_bpm:.6}");
    println!("out,{}", out.display());
    Ok(())
}

fn parse_spans(raw: &str) -> CliResult<Vec<(usize, usize)>> {
    raw.split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|pair| {
            let Some((start, len)) = pair.split_once(':') else {
                return Err(CliError::Usage(format!(
                    "spans: expected `start:len`, got {pair:?}"
                )));
            };
            let parse = |v: &str, what: &str| {
                v.trim().parse::<usize>().map_err(|e| {
                    CliError::Usage(format!("spans: cannot parse {what} {v:?}: {e}"))
                })
            };
            Ok((parse(start, "start")?, parse(len, "len")?))
        })
        .collect()
}

fn synth_blinks_cmd(mut kv: KeyVals, args: &SynthArgs) -> CliResult<()> {
    let num_frames: usize = kv.require_parsed("num_frames")?;
    let noise_std: f64 = kv.take_parsed("noise_std")?.unwrap_or(0.0);
    let seed: u64 = kv.take_parsed("seed")?.unwrap_or(0);
    let spans_raw = kv.take("spans");
    let plan_raw = kv.take("plan");
    kv.finish()?;

    let blink_spans = match (spans_raw, plan_raw) {
        (Some(raw), None) => parse_spans(&raw)?,
        (None, Some(raw)) => {
            let f = parse_fields::<usize>(&raw, 4, "plan")?;
            plan_blink_spans(num_frames, f[0], f[1], f[2], f[3], seed)?
        }
        _ => {
            return Err(CliError::Usage(
                "blink synthesis needs exactly one of `spans` or `plan`".into(),
            ))
        }
    };

    let cfg = SynthBlinkConfig {
        num_frames,
        blink_spans,
        image_noise_std: noise_std,
        seed,
    };
    let (images, labels) = synth_eye_dataset(&cfg)?;
    let out_dir = args.out_dir.as_ref().ok_or_else(|| {
        CliError::Usage("blink synthesis needs --out-dir <directory>".into())
    })?;
    write_eye_dataset(out_dir, &images, &labels)?;

    println!("kind,blinks");
    println!("frames,{num_frames}");
    println!("blinks,{}", cfg.blink_spans.len());
    for (start, len) in &cfg.blink_spans {
        println!("span,{start},{len}");
    }
    println!("out,{}", out_dir.display());
    Ok(())
}

pub fn run(args: &SynthArgs) -> CliResult<()> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        CliError::Data(format!(
            "Io: cannot read config {}: {e}",
            args.config.display()
        ))
    })?;
    let mut kv = KeyVals::parse(&text)?;
    let kind = kv
        .take("kind")
        .ok_or_else(|| CliError::Usage("config needs `kind = trace` or `kind = blinks`".into()))?;
    match kind.as_str() {
        "trace" => synth_trace_cmd(kv, args),
        "blinks" => synth_blinks_cmd(kv, args),
        other => Err(CliError::Usage(format!(
            "unknown kind {other:?} (expected trace or blinks)"
        ))),
    }
}
