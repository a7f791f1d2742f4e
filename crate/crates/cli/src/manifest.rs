//! Input manifests: a `key = value` file naming either a trace CSV or a
//! glob of PPM frames, with the capture rate and an optional ROI.
//!
//! Keys: `fps` (Hz, required), `format_version` (must be 1), exactly one of
//! `trace` (CSV path) or `frames` (PPM glob), and optional `roi = x0,y0,w,h`
//! (defaults to the full frame). Relative paths resolve against the
//! manifest's directory.

use crate::error::{CliError, CliResult};
use crate::keyval::{parse_fields, KeyVals};
use pulsegaze::io::{read_ppm, read_trace_csv};
use pulsegaze::trace::{build_trace, ChannelTrace, RoiSpec};
use std::path::{Path, PathBuf};

pub enum Locator {
    Trace(PathBuf),
    Frames(String),
}

pub struct Manifest {
    pub fps: f64,
    pub roi: Option<RoiSpec>,
    pub locator: Locator,
}

impl Manifest {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::Data(format!("Io: cannot read manifest {}: {e}", path.display()))
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    fn parse(text: &str, base: &Path) -> CliResult<Self> {
        let mut kv = KeyVals::parse(text)?;
        let version: u32 = kv.require_parsed("format_version")?;
        if version != 1 {
            return Err(CliError::Usage(format!(
                "format_version {version} is not supported (expected 1)"
            )));
        }
        let fps: f64 = kv.require_parsed("fps")?;
        if !(fps > 0.0) || !fps.is_finite() {
            return Err(CliError::Usage(format!("fps must be positive, got {fps}")));
        }
        let roi = match kv.take("roi") {
            None => None,
            Some(raw) => {
                let f = parse_fields::<usize>(&raw, 4, "roi")?;
                Some(RoiSpec {
                    x0: f[0],
                    y0: f[1],
                    w: f[2],
                    h: f[3],
                })
            }
        };
        let trace = kv.take("trace");
        let frames = kv.take("frames");
        kv.finish()?;
        let locator = match (trace, frames) {
            (Some(t), None) => Locator::Trace(base.join(t)),
            (None, Some(f)) => Locator::Frames(base.join(f).to_string_lossy().into_owned()),
            (Some(_), Some(_)) => {
                return Err(CliError::Usage(
                    "manifest names both `trace` and `frames`; use exactly one".into(),
                ))
            }
            (None, None) => {
                return Err(CliError::Usage(
                    "manifest must name an input via `trace` or `frames`".into(),
                ))
            }
        };
        Ok(Self { fps, roi, locator })
    }

    /// Reads the manifest's input into a channel trace.
    pub fn load_trace(&self) -> CliResult<ChannelTrace> {
        match &self.locator {
            Locator::Trace(path) => Ok(read_trace_csv(path, self.fps)?),
            Locator::Frames(pattern) => {
                let mut paths: Vec<PathBuf> = glob::glob(pattern)
                    .map_err(|e| CliError::Usage(format!("frames glob {pattern:?}: {e}")))?
                    .collect::<Result<_, _>>()
                    .map_err(|e| CliError::Data(format!("Io: {e}")))?;
                paths.sort();
                if paths.is_empty() {
                    return Err(CliError::Data(format!(
                        "InvalidData: no frames match {pattern:?}"
                    )));
                }
                let frames = paths
                    .iter()
                    .map(|p| read_ppm(p))
                    .collect::<Result<Vec<_>, _>>()?;
                let roi = match &self.roi {
                    Some(roi) => *roi,
                    None => RoiSpec {
                        x0: 0,
                        y0: 0,
                        w: frames[0].width(),
                        h: frames[0].height(),
                    },
                };
                Ok(build_trace(&frames, &roi, self.fps)?)
            }
        }
    }
}
