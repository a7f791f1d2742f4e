//! File formats: portable pixmaps, trace CSV, eye datasets, and model files.
//!
//! Everything here is plain text or binary Netpbm so fixtures can be
//! inspected and produced by other tools:
//!
//! - video frames: binary PPM (P6), maxval 255
//! - eye crops: binary PGM (P5), maxval 255
//! - color traces: CSV with the mandatory header `frame,r,g,b`
//! - eye datasets: a directory of PGM files plus `labels.csv` (`file,label`)
//!   for training sets, or `sequence.csv` (`index,file`, empty file meaning
//!   no eye crop) for classification sequences
//! - models: versioned text files whose first line is
//!   `pulsegaze-model v1 <kind>`
//!
//! Floats are written with 18 significant digits so read-back is bit-exact.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::blink::{BlinkModel, EyeImage, FrameLabel};
use crate::error::{Error, Result};
use crate::ica::UnmixingMatrix;
use crate::trace::{ChannelTrace, Frame};

/// Writes a frame as binary PPM (P6, maxval 255).
pub fn write_ppm(path: &Path, frame: &Frame) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P6\n{} {}\n255\n", frame.width(), frame.height())?;
    let mut bytes = Vec::with_capacity(frame.width() * frame.height() * 3);
    for px in frame.pixels() {
        bytes.extend_from_slice(px);
    }
    out.write_all(&bytes)?;
    Ok(())
}

/// Reads a binary PPM (P6) frame.
///
/// The header may contain `#` comments and arbitrary whitespace, per the
/// Netpbm convention; only maxval 255 is supported.
pub fn read_ppm(path: &Path) -> Result<Frame> {
    let data = fs::read(path)?;
    let (w, h, pixels) = parse_netpbm(&data, b"P6", path)?;
    let rgb: Vec<[u8; 3]> = pixels.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
    Frame::new(w, h, rgb)
}

/// Writes a grayscale buffer as binary PGM (P5, maxval 255).
pub fn write_pgm(path: &Path, width: usize, height: usize, bytes: &[u8]) -> Result<()> {
    if bytes.len() != width * height {
        return Err(Error::InvalidData(format!(
            "pgm buffer has {} bytes, expected {}x{}={}",
            bytes.len(),
            width,
            height,
            width * height
        )));
    }
    let mut out = BufWriter::new(fs::File::create(path)?);
    write!(out, "P5\n{width} {height}\n255\n")?;
    out.write_all(bytes)?;
    Ok(())
}

/// Reads a binary PGM (P5) image as `(width, height, bytes)`.
pub fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let data = fs::read(path)?;
    let (w, h, pixels) = parse_netpbm(&data, b"P5", path)?;
    Ok((w, h, pixels))
}

/// Shared Netpbm header parser: magic, two dimensions, maxval 255, then one
/// whitespace byte and the raster of `width * height * samples` bytes.
fn parse_netpbm(data: &[u8], magic: &[u8], path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let bad = |msg: String| Error::InvalidData(format!("{}: {msg}", path.display()));
    if data.len() < 2 || &data[..2] != magic {
        return Err(bad(format!(
            "expected {} magic",
            String::from_utf8_lossy(magic)
        )));
    }
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in &mut fields {
        // Skip whitespace and comment lines before each header field.
        loop {
            while pos < data.len() && data[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < data.len() && data[pos] == b'#' {
                while pos < data.len() && data[pos] != b'\n' {
                    pos += 1;
                }
            } else {
                break;
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(bad("truncated header".into()));
        }
        *field = std::str::from_utf8(&data[start..pos])
            .expect("digits are utf8")
            .parse()
            .map_err(|e| bad(format!("bad header number: {e}")))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(bad(format!("unsupported maxval {maxval}")));
    }
    if pos >= data.len() || !data[pos].is_ascii_whitespace() {
        return Err(bad("missing raster separator".into()));
    }
    pos += 1;
    let samples = if magic == b"P6" { 3 } else { 1 };
    let need = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(samples))
        .ok_or_else(|| bad("image dimensions overflow".into()))?;
    let raster = &data[pos..];
    if raster.len() < need {
        return Err(bad(format!(
            "raster has {} bytes, expected {need}",
            raster.len()
        )));
    }
    Ok((width, height, raster[..need].to_vec()))
}

/// Writes a trace as CSV with the header `frame,r,g,b` and LF line endings.
pub fn write_trace_csv(path: &Path, trace: &ChannelTrace) -> Result<()> {
    let mut out = BufWriter::new(fs::File::create(path)?);
    out.write_all(b"frame,r,g,b\n")?;
    for i in 0..trace.len() {
        writeln!(
            out,
            "{i},{:.17e},{:.17e},{:.17e}",
            trace.r[i], trace.g[i], trace.b[i]
        )?;
    }
    Ok(())
}

/// Reads a `frame,r,g,b` CSV back into a trace at the given frame rate.
///
/// # Errors
/// `InvalidData` for a missing/unknown header or malformed rows; errors from
/// trace validation (length, fps) propagate.
pub fn read_trace_csv(path: &Path, fps: f64) -> Result<ChannelTrace> {
    let text = fs::read_to_string(path)?;
    let bad = |msg: String| Error::InvalidData(format!("{}: {msg}", path.display()));
    let mut lines = text.lines();
    match lines.next() {
        Some("frame,r,g,b") => {}
        other => {
            return Err(bad(format!(
                "expected header \"frame,r,g,b\", got {other:?}"
            )))
        }
    }
    let (mut r, mut g, mut b) = (Vec::new(), Vec::new(), Vec::new());
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let mut fields = line.split(',');
        let mut next = |name: &str| -> Result<&str> {
            fields
                .next()
                .ok_or_else(|| bad(format!("row {}: missing {name}", lineno + 2)))
        };
        next("frame index")?;
        let parse = |name: &str, field: &str| -> Result<f64> {
            field
                .parse()
                .map_err(|e| bad(format!("row {}: bad {name}: {e}", lineno + 2)))
        };
        let rv = next("r")?;
        r.push(parse("r", rv)?);
        let gv = next("g")?;
        g.push(parse("g", gv)?);
        let bv = next("b")?;
        b.push(parse("b", bv)?);
    }
    ChannelTrace::new(r, g, b, fps)
}

fn image_file_name(index: usize) -> String {
    format!("eye{index:05}.pgm")
}

/// Writes a labeled eye dataset: one PGM per image plus `labels.csv`.
///
/// Only Open and Closed labels are valid in a training dataset; use
/// [`write_eye_sequence`] for sequences that may lack eye crops.
pub fn write_eye_dataset(dir: &Path, images: &[EyeImage], labels: &[FrameLabel]) -> Result<()> {
    if images.len() != labels.len() {
        return Err(Error::InvalidData(format!(
            "{} images vs {} labels",
            images.len(),
            labels.len()
        )));
    }
    if labels.contains(&FrameLabel::NoEye) {
        return Err(Error::InvalidData(
            "training datasets cannot contain noeye labels".into(),
        ));
    }
    fs::create_dir_all(dir)?;
    let mut manifest = String::from("file,label\n");
    for (i, (img, label)) in images.iter().zip(labels).enumerate() {
        let name = image_file_name(i);
        write_pgm(
            &dir.join(&name),
            EyeImage::SIDE,
            EyeImage::SIDE,
            &img.to_gray_bytes(),
        )?;
        manifest.push_str(&format!("{name},{label}\n"));
    }
    fs::write(dir.join("labels.csv"), manifest)?;
    Ok(())
}

/// Reads a labeled eye dataset written by [`write_eye_dataset`].
pub fn read_eye_dataset(dir: &Path) -> Result<(Vec<EyeImage>, Vec<FrameLabel>)> {
    let manifest_path = dir.join("labels.csv");
    let text = fs::read_to_string(&manifest_path)?;
    let bad = |msg: String| Error::InvalidData(format!("{}: {msg}", manifest_path.display()));
    let mut lines = text.lines();
    match lines.next() {
        Some("file,label") => {}
        other => return Err(bad(format!("expected header \"file,label\", got {other:?}"))),
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let (file, label) = line
            .split_once(',')
            .ok_or_else(|| bad(format!("row {}: expected file,label", lineno + 2)))?;
        let label: FrameLabel = label.parse()?;
        if label == FrameLabel::NoEye {
            return Err(bad(format!("row {}: noeye not allowed in datasets", lineno + 2)));
        }
        images.push(load_eye_pgm(&dir.join(file))?);
        labels.push(label);
    }
    if images.is_empty() {
        return Err(Error::EmptyInput("eye dataset"));
    }
    Ok((images, labels))
}

/// Writes a classification sequence: PGMs plus `sequence.csv` where an empty
/// file column marks a frame without an eye crop.
pub fn write_eye_sequence(dir: &Path, frames: &[Option<EyeImage>]) -> Result<()> {
    fs::create_dir_all(dir)?;
    let mut manifest = String::from("index,file\n");
    for (i, frame) in frames.iter().enumerate() {
        match frame {
            Some(img) => {
                let name = image_file_name(i);
                write_pgm(
                    &dir.join(&name),
                    EyeImage::SIDE,
                    EyeImage::SIDE,
                    &img.to_gray_bytes(),
                )?;
                manifest.push_str(&format!("{i},{name}\n"));
            }
            None => manifest.push_str(&format!("{i},\n")),
        }
    }
    fs::write(dir.join("sequence.csv"), manifest)?;
    Ok(())
}

/// Reads a classification sequence.
///
/// With a `sequence.csv` manifest, rows map to frames in order and empty
/// file columns become `None`. Without one, every `*.pgm` file in the
/// directory is read in lexicographic order.
pub fn read_eye_sequence(dir: &Path) -> Result<Vec<Option<EyeImage>>> {
    let manifest_path = dir.join("sequence.csv");
    if manifest_path.is_file() {
        let text = fs::read_to_string(&manifest_path)?;
        let bad = |msg: String| Error::InvalidData(format!("{}: {msg}", manifest_path.display()));
        let mut lines = text.lines();
        match lines.next() {
            Some("index,file") => {}
            other => return Err(bad(format!("expected header \"index,file\", got {other:?}"))),
        }
        let mut frames = Vec::new();
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let (_, file) = line
                .split_once(',')
                .ok_or_else(|| bad(format!("row {}: expected index,file", lineno + 2)))?;
            if file.is_empty() {
                frames.push(None);
            } else {
                frames.push(Some(load_eye_pgm(&dir.join(file))?));
            }
        }
        if frames.is_empty() {
            return Err(Error::EmptyInput("eye sequence"));
        }
        return Ok(frames);
    }
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .collect::<std::io::Result<Vec<_>>>()?
        .into_iter()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|e| e == "pgm"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyInput("eye sequence"));
    }
    paths
        .iter()
        .map(|p| load_eye_pgm(p).map(Some))
        .collect()
}

/// Reads one PGM as an eye crop, resizing to 24x24 when necessary.
pub fn load_eye_pgm(path: &Path) -> Result<EyeImage> {
    let (w, h, bytes) = read_pgm(path)?;
    if (w, h) == (EyeImage::SIDE, EyeImage::SIDE) {
        EyeImage::from_gray(&bytes)
    } else {
        EyeImage::from_gray_resized(w, h, &bytes)
    }
}

/// Saves a blink classifier to its versioned text format.
pub fn save_blink_model(path: &Path, model: &BlinkModel) -> Result<()> {
    fs::write(path, model.to_text())?;
    Ok(())
}

/// Loads a blink classifier, dispatching on the header line.
pub fn load_blink_model(path: &Path) -> Result<BlinkModel> {
    let text = fs::read_to_string(path)?;
    BlinkModel::from_text(&text)
}

/// Saves an unmixing matrix to its versioned text format.
pub fn save_unmixing(path: &Path, m: &UnmixingMatrix) -> Result<()> {
    fs::write(path, m.to_text())?;
    Ok(())
}

/// Loads an unmixing matrix.
pub fn load_unmixing(path: &Path) -> Result<UnmixingMatrix> {
    let text = fs::read_to_string(path)?;
    UnmixingMatrix::from_text(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{synth_labeled_images, synth_trace, SynthTraceConfig};

    fn temp_dir(tag: &str) -> PathBuf {
        let dir = std::env::temp_dir().join(format!(
            "pulsegaze-io-{tag}-{}",
            std::process::id()
        ));
        if dir.exists() {
            fs::remove_dir_all(&dir).unwrap();
        }
        fs::create_dir_all(&dir).unwrap();
        dir
    }

    #[test]
    fn ppm_round_trip() {
        let dir = temp_dir("ppm");
        let pixels: Vec<[u8; 3]> = (0..12)
            .map(|i| [(i * 3) as u8, (i * 5) as u8, (255 - i * 7) as u8])
            .collect();
        let frame = Frame::new(4, 3, pixels.clone()).unwrap();
        let path = dir.join("f.ppm");
        write_ppm(&path, &frame).unwrap();
        let back = read_ppm(&path).unwrap();
        assert_eq!((back.width(), back.height()), (4, 3));
        assert_eq!(back.pixels(), pixels.as_slice());
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn pgm_round_trip_and_comment_handling() {
        let dir = temp_dir("pgm");
        let bytes: Vec<u8> = (0..24u32 * 24).map(|i| (i % 256) as u8).collect();
        let path = dir.join("e.pgm");
        write_pgm(&path, 24, 24, &bytes).unwrap();
        let (w, h, back) = read_pgm(&path).unwrap();
        assert_eq!((w, h), (24, 24));
        assert_eq!(back, bytes);

        let mut commented = b"P5\n# a comment\n2 2\n# another\n255\n".to_vec();
        commented.extend_from_slice(&[1, 2, 3, 4]);
        let cpath = dir.join("c.pgm");
        fs::write(&cpath, commented).unwrap();
        let (w, h, data) = read_pgm(&cpath).unwrap();
        assert_eq!((w, h, data), (2, 2, vec![1, 2, 3, 4]));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn malformed_netpbm_is_rejected() {
        let dir = temp_dir("badpgm");
        for (name, content) in [
            ("magic.pgm", b"P4\n1 1\n255\n\x00".to_vec()),
            ("short.pgm", b"P5\n4 4\n255\n\x00\x01".to_vec()),
            ("maxval.pgm", b"P5\n1 1\n65535\n\x00\x00".to_vec()),
        ] {
            let path = dir.join(name);
            fs::write(&path, content).unwrap();
            assert!(matches!(read_pgm(&path), Err(Error::InvalidData(_))), "{name}");
        }
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn trace_csv_round_trip_is_bit_exact() {
        let dir = temp_dir("csv");
        let (trace, _) = synth_trace(&SynthTraceConfig {
            noise_std: 0.05,
            ..SynthTraceConfig::default()
        })
        .unwrap();
        let path = dir.join("t.csv");
        write_trace_csv(&path, &trace).unwrap();
        let back = read_trace_csv(&path, trace.fps).unwrap();
        assert_eq!(trace.r, back.r);
        assert_eq!(trace.g, back.g);
        assert_eq!(trace.b, back.b);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn trace_csv_requires_header() {
        let dir = temp_dir("csvhdr");
        let path = dir.join("t.csv");
        fs::write(&path, "0,1.0,2.0,3.0\n").unwrap();
        assert!(matches!(
            read_trace_csv(&path, 30.0),
            Err(Error::InvalidData(_))
        ));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn eye_dataset_round_trip() {
        let dir = temp_dir("dataset");
        let (open, closed) = synth_labeled_images(3, 0.0, 1).unwrap();
        let images: Vec<EyeImage> = open.iter().chain(&closed).cloned().collect();
        let labels = [vec![FrameLabel::Open; 3], vec![FrameLabel::Closed; 3]].concat();
        write_eye_dataset(&dir, &images, &labels).unwrap();
        let (rimages, rlabels) = read_eye_dataset(&dir).unwrap();
        assert_eq!(rlabels, labels);
        for (a, b) in images.iter().zip(&rimages) {
            assert_eq!(a.to_gray_bytes(), b.to_gray_bytes());
        }
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn dataset_rejects_noeye_labels() {
        let dir = temp_dir("noeye");
        let (open, _) = synth_labeled_images(1, 0.0, 1).unwrap();
        assert!(matches!(
            write_eye_dataset(&dir, &open, &[FrameLabel::NoEye]),
            Err(Error::InvalidData(_))
        ));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn eye_sequence_round_trip_with_gaps() {
        let dir = temp_dir("sequence");
        let (open, closed) = synth_labeled_images(2, 0.0, 1).unwrap();
        let frames = vec![
            Some(open[0].clone()),
            None,
            Some(closed[0].clone()),
            Some(open[1].clone()),
            None,
        ];
        write_eye_sequence(&dir, &frames).unwrap();
        let back = read_eye_sequence(&dir).unwrap();
        assert_eq!(back.len(), 5);
        assert!(back[1].is_none() && back[4].is_none());
        assert_eq!(
            back[2].as_ref().unwrap().to_gray_bytes(),
            closed[0].to_gray_bytes()
        );
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn sequence_without_manifest_reads_sorted_pgms() {
        let dir = temp_dir("plainseq");
        let (open, _) = synth_labeled_images(3, 0.0, 1).unwrap();
        for (i, img) in open.iter().enumerate() {
            write_pgm(
                &dir.join(format!("frame{i}.pgm")),
                EyeImage::SIDE,
                EyeImage::SIDE,
                &img.to_gray_bytes(),
            )
            .unwrap();
        }
        let frames = read_eye_sequence(&dir).unwrap();
        assert_eq!(frames.len(), 3);
        assert!(frames.iter().all(Option::is_some));
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn blink_model_file_round_trip() {
        let dir = temp_dir("model");
        let (open, closed) = synth_labeled_images(4, 6.0, 2).unwrap();
        let all: Vec<EyeImage> = open.iter().chain(&closed).cloned().collect();
        let basis = crate::blink::fit_pca(&all, 3).unwrap();
        let model = BlinkModel::Lda(crate::blink::fit_lda(basis, &open, &closed).unwrap());
        let path = dir.join("m.pgmodel");
        save_blink_model(&path, &model).unwrap();
        let back = load_blink_model(&path).unwrap();
        assert_eq!(model, back);
        fs::remove_dir_all(dir).unwrap();
    }

    #[test]
    fn missing_files_surface_io_errors() {
        let path = Path::new("/nonexistent/pulsegaze/m.model");
        assert!(matches!(load_blink_model(path), Err(Error::Io(_))));
        assert!(matches!(read_ppm(path), Err(Error::Io(_))));
    }
}
