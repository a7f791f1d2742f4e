//! Tagged-line float serialization shared by the blink model formats.

use crate::error::{Error, Result};

/// Appends `tag v0 v1 ...` with 18 significant digits per float, so parsing
/// the line recovers the exact same bit patterns.
pub(crate) fn push_tagged_floats(out: &mut String, tag: &str, values: &[f64]) {
    out.push_str(tag);
    for v in values {
        out.push(' ');
        out.push_str(&format!("{v:.17e}"));
    }
    out.push('\n');
}

/// Parses a `tag v0 v1 ...` line, enforcing the tag and the value count.
pub(crate) fn parse_tagged_floats(
    line: Option<&str>,
    tag: &str,
    expect: usize,
) -> Result<Vec<f64>> {
    let line = line.ok_or_else(|| Error::InvalidData(format!("missing {tag} line")))?;
    let mut parts = line.split_whitespace();
    if parts.next() != Some(tag) {
        return Err(Error::InvalidData(format!(
            "expected {tag} line, got {line:?}"
        )));
    }
    let values: Vec<f64> = parts
        .map(|p| {
            p.parse()
                .map_err(|e| Error::InvalidData(format!("bad float in {tag} line: {e}")))
        })
        .collect::<Result<_>>()?;
    if values.len() != expect {
        return Err(Error::InvalidData(format!(
            "{tag} line has {} values, expected {expect}",
            values.len()
        )));
    }
    Ok(values)
}
