// SPDX-License-Identifier: MIT OR Apache-2.0

//! Delimited-text ingestion and atomic file output.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use lsar_core::TimeSeries;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ColumnSelector {
    Name(String),
    /// 0-based.
    Index(usize),
}

impl FromStr for ColumnSelector {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s.parse() {
            Ok(i) => ColumnSelector::Index(i),
            Err(_) => ColumnSelector::Name(s.to_owned()),
        })
    }
}

impl fmt::Display for ColumnSelector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ColumnSelector::Name(n) => f.write_str(n),
            ColumnSelector::Index(i) => write!(f, "#{i}"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum Transform {
    #[default]
    None,
    Center,
    LogDiff,
    LogDiffCenter,
}

impl Transform {
    pub fn apply(self, series: &TimeSeries) -> lsar_core::Result<TimeSeries> {
        Ok(match self {
            Transform::None => series.clone(),
            Transform::Center => series.center(),
            Transform::LogDiff => series.log_diff()?,
            Transform::LogDiffCenter => series.log_diff()?.center(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delimiter {
    Byte(u8),
    /// Any run of spaces or tabs.
    Whitespace,
}

impl Default for Delimiter {
    fn default() -> Self {
        Delimiter::Byte(b',')
    }
}

impl FromStr for Delimiter {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "whitespace" | "ws" => Ok(Delimiter::Whitespace),
            "tab" | "\\t" => Ok(Delimiter::Byte(b'\t')),
            _ if s.len() == 1 && s.is_ascii() => Ok(Delimiter::Byte(s.as_bytes()[0])),
            _ => Err(format!("delimiter must be one ASCII character, `tab` or `whitespace`, got {s:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IngestSpec {
    pub path: PathBuf,
    pub column: ColumnSelector,
    pub transform: Transform,
    pub delimiter: Delimiter,
    pub has_header: bool,
}

impl IngestSpec {
    /// Single header `y`, comma-separated, no transform.
    pub fn series_file(path: impl Into<PathBuf>) -> Self {
        Self {
            path: path.into(),
            column: ColumnSelector::Index(0),
            transform: Transform::None,
            delimiter: Delimiter::default(),
            has_header: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub original_len: usize,
    pub series: TimeSeries,
    pub column_name: Option<String>,
}

pub fn ingest(spec: &IngestSpec) -> Result<Ingested> {
    let (values, column_name) = read_column(spec)?;
    let original_len = values.len();
    let raw = TimeSeries::new(values)?;
    Ok(Ingested {
        original_len,
        series: spec.transform.apply(&raw)?,
        column_name,
    })
}

/// Reads a series file written by [`write_series`] or any compatible CSV.
pub fn read_series(path: &Path) -> Result<TimeSeries> {
    Ok(ingest(&IngestSpec::series_file(path))?.series)
}

/// Lines starting with `#` and blank lines are skipped.
pub fn read_column(spec: &IngestSpec) -> Result<(Vec<f64>, Option<String>)> {
    let text = fs::read_to_string(&spec.path).map_err(|e| CliError::io(&spec.path, e))?;
    let records = split_records(&text, spec)?;
    let mut iter = records.into_iter();
    let header = if spec.has_header {
        iter.next().map(|(_, fields)| fields)
    } else {
        None
    };
    let index = match (&spec.column, &header) {
        (ColumnSelector::Index(i), _) => *i,
        (ColumnSelector::Name(name), Some(h)) => h.iter().position(|c| c == name).ok_or_else(|| {
            CliError::MissingColumn {
                path: spec.path.clone(),
                wanted: name.clone(),
                available: h.clone(),
            }
        })?,
        (ColumnSelector::Name(name), None) => {
            return Err(CliError::Usage(format!(
                "column {name:?} selected by name but the file has no header"
            )))
        }
    };
    let column_name = header.as_ref().and_then(|h| h.get(index).cloned());
    if let Some(h) = &header {
        if index >= h.len() {
            return Err(CliError::MissingColumn {
                path: spec.path.clone(),
                wanted: spec.column.to_string(),
                available: h.clone(),
            });
        }
    }
    let label = column_name.clone().unwrap_or_else(|| spec.column.to_string());
    let mut values = Vec::new();
    for (line, fields) in iter {
        let field = fields.get(index).ok_or_else(|| CliError::ShortRow {
            path: spec.path.clone(),
            row: line,
            column: label.clone(),
        })?;
        let v: f64 = field.trim().parse().ok().filter(|v: &f64| v.is_finite()).ok_or_else(|| CliError::Parse {
            path: spec.path.clone(),
            row: line,
            column: label.clone(),
            value: field.clone(),
        })?;
        values.push(v);
    }
    Ok((values, column_name))
}

/// `(1-based line number, fields)` for every non-comment, non-blank line.
fn split_records(text: &str, spec: &IngestSpec) -> Result<Vec<(usize, Vec<String>)>> {
    let content = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    match spec.delimiter {
        Delimiter::Whitespace => Ok(content
            .map(|(i, l)| (i + 1, l.split_whitespace().map(str::to_owned).collect()))
            .collect()),
        Delimiter::Byte(b) => {
            let mut out = Vec::new();
            for (i, l) in content {
                let mut reader = csv::ReaderBuilder::new()
                    .delimiter(b)
                    .has_headers(false)
                    .flexible(true)
                    .from_reader(l.as_bytes());
                let mut record = csv::StringRecord::new();
                reader.read_record(&mut record).map_err(|e| CliError::Malformed {
                    path: spec.path.clone(),
                    message: format!("line {}: {e}", i + 1),
                })?;
                out.push((i + 1, record.iter().map(str::to_owned).collect()));
            }
            Ok(out)
        }
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        String::new()
    }
}

/// Writes through a temporary file in the target directory, then renames it
/// into place; on any error the target is left untouched.
pub fn write_atomic(path: &Path, body: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| CliError::io(path, e))?;
    {
        let mut w = std::io::BufWriter::new(tmp.as_file_mut());
        body(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(path, e))?;
    }
    tmp.as_file().sync_all().map_err(|e| CliError::io(path, e))?;
    tmp.persist(path).map_err(|e| CliError::io(path, e.error))?;
    Ok(())
}

/// One-column CSV with header `y`.
pub fn write_series(path: &Path, series: &TimeSeries) -> Result<()> {
    write_atomic(path, |w| {
        writeln!(w, "y")?;
        for v in series.values() {
            writeln!(w, "{}", fmt_f64(*v))?;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selector_parsing() {
        assert_eq!("2".parse::<ColumnSelector>().unwrap(), ColumnSelector::Index(2));
        assert_eq!("R8".parse::<ColumnSelector>().unwrap(), ColumnSelector::Name("R8".into()));
    }

    #[test]
    fn delimiter_parsing() {
        assert_eq!("whitespace".parse::<Delimiter>().unwrap(), Delimiter::Whitespace);
        assert_eq!(";".parse::<Delimiter>().unwrap(), Delimiter::Byte(b';'));
        assert_eq!("tab".parse::<Delimiter>().unwrap(), Delimiter::Byte(b'\t'));
        assert!("::".parse::<Delimiter>().is_err());
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for v in [0.1, -1.0 / 3.0, 1e-300, 123456.789, f64::MAX] {
            assert_eq!(fmt_f64(v).parse::<f64>().unwrap(), v);
        }
    }
}
