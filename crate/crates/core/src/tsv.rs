//! Small helpers shared by the tab-separated file formats.

use std::io::BufRead;

use crate::error::{Error, Result};

/// Formats a real with 17 significant digits in scientific notation, which
/// parses back to the identical `f64`.
pub fn fmt_real(x: f64) -> String {
    format!("{x:.16e}")
}

/// Parses a real, rejecting NaN and infinities.
pub fn parse_finite(field: &str, line: usize) -> Result<f64> {
    let value: f64 = field.trim().parse().map_err(|_| Error::MalformedRow {
        line,
        reason: format!("`{field}` is not a number"),
    })?;
    if !value.is_finite() {
        return Err(Error::NonFiniteScore {
            line,
            value: field.to_string(),
        });
    }
    Ok(value)
}

pub(crate) fn parse_flag(field: &str, line: usize) -> Result<bool> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(Error::MalformedRow {
            line,
            reason: format!("flag `{other}` is not 0 or 1"),
        }),
    }
}

/// A data row with its 1-based line number.
pub(crate) struct Row {
    pub line: usize,
    pub text: String,
}

/// Reads every non-empty, non-comment line. Comment lines start with `#`.
pub(crate) fn data_rows<R: BufRead>(reader: R) -> Result<Vec<Row>> {
    let mut rows = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let text = line.strip_suffix('\r').unwrap_or(&line);
        if text.is_empty() || text.starts_with('#') {
            continue;
        }
        rows.push(Row {
            line: i + 1,
            text: text.to_string(),
        });
    }
    Ok(rows)
}

pub(crate) fn write_comments<W: std::io::Write>(out: &mut W, comments: &[String]) -> Result<()> {
    for c in comments {
        writeln!(out, "# {c}")?;
    }
    Ok(())
}
