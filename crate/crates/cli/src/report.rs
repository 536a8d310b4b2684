//! Tabular results and their two on-disk encodings.
//!
//! Delimited: a `# entroflow <command>` line, a header row, data rows, then
//! one `# key=value` line per summary entry. Structured: one JSON object with
//! keys `command`, `records` (one object per row) and `summary`.
//!
//! Cells are JSON scalars. Floats are written in shortest round-trip form and
//! always carry a `.` or an exponent, so a delimited cell reads back as an
//! integer, a float, a boolean, empty (null) or text. Text cells must not look
//! like any of the others.

use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use clap::ValueEnum;
use serde_json::{Map, Number, Value};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    #[default]
    Delimited,
    Structured,
}

impl FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Self as ValueEnum>::from_str(s, false)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
}

/// A float cell; non-finite values become null.
pub fn float(x: f64) -> Value {
    Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl Report {
    pub fn new(command: &str, columns: &[&str]) -> Self {
        Self {
            command: command.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
            summary: Map::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.summary.insert(key.to_string(), value.into());
    }

    pub fn render(&self, format: Format) -> CliResult<String> {
        match format {
            Format::Delimited => self.to_delimited(),
            Format::Structured => Ok(self.to_structured()),
        }
    }

    pub fn parse(text: &str, format: Format) -> CliResult<Self> {
        match format {
            Format::Delimited => Self::from_delimited(text),
            Format::Structured => Self::from_structured(text),
        }
    }

    pub fn to_delimited(&self) -> CliResult<String> {
        let mut out = format!("# entroflow {}\n", self.command);
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            let cells = row.iter().map(cell_text).collect::<CliResult<Vec<_>>>()?;
            w.write_record(&cells).map_err(csv_err)?;
        }
        let body = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
        out.push_str(&String::from_utf8(body).expect("csv output is utf-8"));
        for (key, value) in &self.summary {
            out.push_str(&format!("# {key}={}\n", cell_text(value)?));
        }
        Ok(out)
    }

    pub fn from_delimited(text: &str) -> CliResult<Self> {
        let malformed = |what: &str| CliError::validation(format!("malformed delimited report: {what}"));
        let mut lines = text.lines();
        let command = lines
            .next()
            .and_then(|l| l.strip_prefix("# entroflow "))
            .ok_or_else(|| malformed("missing title line"))?
            .to_string();
        let (body, footer): (Vec<&str>, Vec<&str>) = lines.partition(|l| !l.starts_with('#'));
        let body = body.join("\n");
        let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
        let columns: Vec<String> = r.headers().map_err(csv_err)?.iter().map(String::from).collect();
        let rows = r
            .records()
            .map(|rec| Ok(rec.map_err(csv_err)?.iter().map(read_cell).collect()))
            .collect::<CliResult<Vec<Vec<Value>>>>()?;
        let mut summary = Map::new();
        for line in footer {
            let (key, value) = line[1..].trim_start().split_once('=').ok_or_else(|| malformed(line))?;
            summary.insert(key.to_string(), read_cell(value));
        }
        Ok(Self {
            command,
            columns,
            rows,
            summary,
        })
    }

    pub fn to_structured(&self) -> String {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| Value::Object(self.columns.iter().cloned().zip(row.iter().cloned()).collect()))
            .collect();
        let mut doc = Map::new();
        doc.insert("command".into(), Value::String(self.command.clone()));
        doc.insert("columns".into(), self.columns.clone().into());
        doc.insert("records".into(), Value::Array(records));
        doc.insert("summary".into(), Value::Object(self.summary.clone()));
        let mut text = serde_json::to_string_pretty(&Value::Object(doc)).expect("json values serialize");
        text.push('\n');
        text
    }

    pub fn from_structured(text: &str) -> CliResult<Self> {
        #[derive(serde::Deserialize)]
        #[serde(deny_unknown_fields)]
        struct Doc {
            command: String,
            columns: Vec<String>,
            records: Vec<Map<String, Value>>,
            summary: Map<String, Value>,
        }
        let doc: Doc = serde_json::from_str(text)
            .map_err(|e| CliError::validation(format!("malformed structured report: {e}")))?;
        let rows = doc
            .records
            .into_iter()
            .map(|mut rec| {
                let row = doc
                    .columns
                    .iter()
                    .map(|c| rec.remove(c).unwrap_or(Value::Null))
                    .collect::<Vec<_>>();
                if rec.is_empty() {
                    Ok(row)
                } else {
                    Err(CliError::validation("malformed structured report: record key outside columns"))
                }
            })
            .collect::<CliResult<_>>()?;
        Ok(Self {
            command: doc.command,
            columns: doc.columns,
            rows,
            summary: doc.summary,
        })
    }

    /// Renders and writes to `out` atomically, or to stdout without a path.
    pub fn emit(&self, format: Format, out: Option<&Path>) -> CliResult<()> {
        let text = self.render(format)?;
        match out {
            Some(path) => write_atomically(path, text.as_bytes()),
            None => {
                std::io::stdout().lock().write_all(text.as_bytes())?;
                Ok(())
            }
        }
    }
}

/// Writes through a temporary file in the target directory and renames it into place.
pub fn write_atomically(path: &Path, bytes: &[u8]) -> CliResult<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.error.to_string()))?;
    Ok(())
}

fn csv_err(e: csv::Error) -> CliError {
    CliError::validation(format!("malformed delimited report: {e}"))
}

fn cell_text(v: &Value) -> CliResult<String> {
    match v {
        Value::Null => Ok(String::new()),
        Value::Bool(b) => Ok(b.to_string()),
        Value::Number(n) => Ok(n.to_string()),
        Value::String(s) if read_cell(s) == *v => Ok(s.clone()),
        Value::String(s) => Err(CliError::Inconsistency(format!("text cell {s:?} is ambiguous in delimited output"))),
        _ => Err(CliError::Inconsistency("nested value in delimited output".into())),
    }
}

fn read_cell(s: &str) -> Value {
    if s.is_empty() {
        return Value::Null;
    }
    if let Ok(b) = s.parse::<bool>() {
        return Value::Bool(b);
    }
    if let Ok(n) = s.parse::<u64>() {
        return n.into();
    }
    if let Ok(n) = s.parse::<i64>() {
        return n.into();
    }
    let numeric = s.bytes().all(|b| b.is_ascii_digit() || b"+-.eE".contains(&b));
    match s.parse::<f64>() {
        Ok(x) if numeric => float(x),
        _ => Value::String(s.to_string()),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Report {
        let mut r = Report::new("ks", &["n", "H_n", "note"]);
        r.push(vec![1.into(), float(1.0), "{0 1}".into()]);
        r.push(vec![2.into(), float(1.25e-7), Value::Null]);
        r.push(vec![(-3).into(), float(-0.5), "witnessed".into()]);
        r.set("h_estimate", float(1.0));
        r.set("converged", true);
        r.set("system", "bernoulli:0.5,0.5");
        r
    }

    #[test]
    fn both_formats_round_trip() {
        let r = sample();
        for f in [Format::Delimited, Format::Structured] {
            let text = r.render(f).unwrap();
            assert_eq!(Report::parse(&text, f).unwrap(), r, "{f:?}");
        }
    }

    #[test]
    fn delimited_layout() {
        let text = sample().to_delimited().unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# entroflow ks");
        assert_eq!(lines[1], "n,H_n,note");
        assert_eq!(lines[2], "1,1.0,{0 1}");
        assert_eq!(lines[3], "2,1.25e-7,");
        assert_eq!(lines[5], "# h_estimate=1.0");
        assert_eq!(lines[6], "# converged=true");
    }

    #[test]
    fn ambiguous_text_is_refused() {
        let mut r = Report::new("x", &["id"]);
        r.push(vec!["3".into()]);
        assert!(r.to_delimited().is_err());
        assert!(Report::from_structured(&r.to_structured()).is_ok());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("out.csv");
        write_atomically(&path, b"one").unwrap();
        write_atomically(&path, b"two").unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
