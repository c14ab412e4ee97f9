//! Minimal CSV emission and parsing for the experiment reports.
//!
//! Format: optional `# key: value` metadata comments, one header row, then
//! data rows. Comma separator, `.` decimal point, LF line endings. Floats
//! are written with 17 significant digits (`{:.16e}`), which round-trips
//! every finite `f64` exactly; `parse(emit(doc)) == doc` is tested.

use std::fmt::Display;
use std::path::Path;

use crate::error::{Error, Result};

/// One CSV cell.
#[derive(Clone, Debug, PartialEq)]
pub enum CsvField {
    /// Unsigned integer (step counts, sweep parameters, sizes).
    Int(u64),
    /// Finite floating-point value, emitted with 17 significant digits.
    Float(f64),
    /// Bare text label (no commas, newlines, or leading `#`).
    Text(String),
}

impl CsvField {
    fn emit(&self) -> String {
        match self {
            CsvField::Int(v) => v.to_string(),
            CsvField::Float(v) => format!("{v:.16e}"),
            CsvField::Text(v) => v.clone(),
        }
    }

    fn parse(token: &str) -> CsvField {
        if !token.is_empty() && token.bytes().all(|b| b.is_ascii_digit()) {
            if let Ok(v) = token.parse::<u64>() {
                return CsvField::Int(v);
            }
        }
        if token.contains(['e', '.']) {
            if let Ok(v) = token.parse::<f64>() {
                if v.is_finite() {
                    return CsvField::Float(v);
                }
            }
        }
        CsvField::Text(token.to_string())
    }
}

/// An in-memory CSV document: metadata comments, header, rows.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CsvDoc {
    /// `(key, value)` pairs emitted as `# key: value` before the header.
    pub comments: Vec<(String, String)>,
    /// Column names.
    pub header: Vec<String>,
    /// Data rows; every row has one field per column.
    pub rows: Vec<Vec<CsvField>>,
}

impl CsvDoc {
    /// Starts a document with the given column names.
    pub fn new(header: &[&str]) -> Self {
        CsvDoc {
            comments: Vec::new(),
            header: header.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Adds a `# key: value` metadata comment.
    pub fn comment(&mut self, key: &str, value: impl Display) {
        self.comments.push((key.to_string(), value.to_string()));
    }

    /// Appends a row, checking arity and that every value is emittable
    /// (floats finite, text free of separators).
    pub fn push_row(&mut self, row: Vec<CsvField>) -> Result<()> {
        if row.len() != self.header.len() {
            return Err(Error::DimensionMismatch(format!(
                "csv row has {} fields, header has {}",
                row.len(),
                self.header.len()
            )));
        }
        for field in &row {
            match field {
                CsvField::Float(v) if !v.is_finite() => {
                    return Err(Error::Instability(format!(
                        "csv refuses non-finite value {v}"
                    )));
                }
                CsvField::Text(t)
                    if t.contains(',') || t.contains('\n') || t.starts_with('#') =>
                {
                    return Err(Error::InvalidConfig(format!(
                        "csv text field {t:?} needs escaping, which this format does not define"
                    )));
                }
                _ => {}
            }
        }
        self.rows.push(row);
        Ok(())
    }

    /// Renders the document (LF line endings, trailing newline).
    pub fn emit(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.comments {
            out.push_str(&format!("# {k}: {v}\n"));
        }
        out.push_str(&self.header.join(","));
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(CsvField::emit).collect();
            out.push_str(&line.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes the rendered document to a file.
    pub fn write_to(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.emit()).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("writing {}: {e}", path.display()),
            ))
        })
    }

    /// Parses a rendered document back; inverse of [`CsvDoc::emit`] for
    /// documents this module produced.
    pub fn parse(text: &str) -> Result<CsvDoc> {
        let mut comments = Vec::new();
        let mut header: Option<Vec<String>> = None;
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                let (k, v) = rest.split_once(": ").ok_or_else(|| {
                    Error::InvalidConfig(format!("csv comment without key: {line:?}"))
                })?;
                comments.push((k.to_string(), v.to_string()));
                continue;
            }
            match &header {
                None => header = Some(line.split(',').map(|s| s.to_string()).collect()),
                Some(h) => {
                    let row: Vec<CsvField> = line.split(',').map(CsvField::parse).collect();
                    if row.len() != h.len() {
                        return Err(Error::DimensionMismatch(format!(
                            "csv row has {} fields, header has {}",
                            row.len(),
                            h.len()
                        )));
                    }
                    rows.push(row);
                }
            }
        }
        let header = header.ok_or_else(|| Error::InvalidConfig("csv without header".into()))?;
        Ok(CsvDoc { comments, header, rows })
    }
}
