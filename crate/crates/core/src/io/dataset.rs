//! `source_id,label,v1,v2,...` text datasets, one segment per row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::series::Segment;

const HEADER_START: &str = "source_id,";

pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<Segment>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text, path)
}

/// Parses dataset text; `origin` only labels error messages.
pub fn parse_dataset(text: &str, origin: &Path) -> Result<Vec<Segment>> {
    let err = |line: usize, msg: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        msg,
    };
    let mut segments = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.trim();
        if line.is_empty() || (i == 0 && line.starts_with(HEADER_START)) {
            continue;
        }
        let mut fields = line.split(',').map(str::trim);
        let source_id = fields.next().unwrap_or_default();
        let label = fields
            .next()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| err(line_no, "missing class label".into()))?;
        if source_id.is_empty() {
            return Err(err(line_no, "missing source id".into()));
        }
        let mut values = Vec::new();
        for (col, tok) in fields.enumerate() {
            let v: f64 = tok
                .parse()
                .map_err(|_| err(line_no, format!("column {}: {tok:?} is not a number", col + 3)))?;
            if !v.is_finite() {
                return Err(err(line_no, format!("column {}: value {tok} is not finite", col + 3)));
            }
            values.push(v);
        }
        if values.len() < 2 {
            return Err(err(
                line_no,
                format!("row has {} values, need at least 2", values.len()),
            ));
        }
        segments.push(Segment {
            values,
            class_label: label.to_string(),
            source_id: source_id.to_string(),
        });
    }
    if segments.is_empty() {
        return Err(Error::Format(format!("{}: dataset is empty", origin.display())));
    }
    Ok(segments)
}

/// Renders segments with a header sized to the longest row. Values use the
/// shortest representation that parses back to the same `f64`.
pub fn render_dataset(segments: &[Segment]) -> String {
    let width = segments.iter().map(Segment::len).max().unwrap_or(0);
    let mut out = String::from("source_id,label");
    for i in 1..=width {
        write!(out, ",v{i}").unwrap();
    }
    out.push('\n');
    for s in segments {
        out.push_str(&s.source_id);
        out.push(',');
        out.push_str(&s.class_label);
        for v in &s.values {
            write!(out, ",{v:?}").unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn save_dataset(segments: &[Segment], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, render_dataset(segments)).map_err(|e| Error::io(path, e))
}
