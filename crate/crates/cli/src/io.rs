//! CSV ingestion, fixed-format numeric output and JSON rendering.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::{Number, Value};

use crate::CliError;

/// Reads one numeric column from a CSV file. A non-numeric first row is
/// taken as a header; blank lines are skipped.
pub fn ingest_csv(path: &Path, column: usize) -> Result<Vec<f64>, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    parse_csv(&bytes, column).map_err(|msg| CliError::Data(format!("{}: {msg}", path.display())))
}

pub fn parse_csv(bytes: &[u8], column: usize) -> Result<Vec<f64>, String> {
    let mut reader = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(bytes);
    let mut out = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| e.to_string())?;
        let row = record.position().map_or(i as u64 + 1, |p| p.line());
        if record.iter().all(|f| f.trim().is_empty()) {
            continue;
        }
        let field = record
            .get(column)
            .ok_or_else(|| format!("row {row} has no column {column}"))?
            .trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => out.push(v),
            Ok(_) => return Err(format!("row {row}: non-finite value '{field}'")),
            Err(_) if i == 0 => {}
            Err(_) => return Err(format!("row {row}: '{field}' is not a number")),
        }
    }
    if out.is_empty() {
        return Err("no observations".into());
    }
    Ok(out)
}

/// 17 significant digits, scientific notation.
pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Serializes `value` and rewrites every non-integer number into the fixed
/// scientific format. Non-finite floats become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Value {
    let v = serde_json::to_value(value).expect("serializable output");
    fix_numbers(v)
}

fn fix_numbers(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => match n.as_f64() {
            Some(x) if x.is_finite() => Value::Number(fmt_num(x).parse::<Number>().expect("valid number")),
            _ => Value::Null,
        },
        Value::Array(a) => Value::Array(a.into_iter().map(fix_numbers).collect()),
        Value::Object(m) => Value::Object(m.into_iter().map(|(k, v)| (k, fix_numbers(v))).collect()),
        other => other,
    }
}

pub fn json_number(x: f64) -> Value {
    if x.is_finite() {
        Value::Number(fmt_num(x).parse::<Number>().expect("valid number"))
    } else {
        Value::Null
    }
}

/// Destination for a primary output: a file or standard output.
pub struct Output {
    pub path: Option<PathBuf>,
}

impl Output {
    pub fn new(path: Option<PathBuf>) -> Self {
        Self { path }
    }

    pub fn write(&self, text: &str) -> Result<(), CliError> {
        match &self.path {
            Some(p) => write_file(p, text),
            None => {
                let mut out = io::stdout().lock();
                out.write_all(text.as_bytes()).and_then(|_| out.flush()).map_err(|e| CliError::Data(format!("stdout: {e}")))
            }
        }
    }
}

pub fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json");
    s.push('\n');
    s
}

pub struct CsvTable {
    buf: String,
}

impl CsvTable {
    pub fn new(header: &[&str]) -> Self {
        let mut buf = header.join(",");
        buf.push('\n');
        Self { buf }
    }

    pub fn row(&mut self, fields: &[String]) {
        self.buf.push_str(&fields.join(","));
        self.buf.push('\n');
    }

    pub fn finish(self) -> String {
        self.buf
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_and_values() {
        assert_eq!(parse_csv(b"x\n1.0\n2.0\n", 0).unwrap(), vec![1.0, 2.0]);
    }

    #[test]
    fn headerless_single_value() {
        assert_eq!(parse_csv(b"3.5\n", 0).unwrap(), vec![3.5]);
    }

    #[test]
    fn bad_row_is_named() {
        let e = parse_csv(b"x\n1.0\nabc\n", 0).unwrap_err();
        assert!(e.contains("row 3"), "{e}");
    }

    #[test]
    fn trailing_blank_lines_and_columns() {
        assert_eq!(parse_csv(b"year,flow\n1,10.5\n2,11\n\n\n", 1).unwrap(), vec![10.5, 11.0]);
        assert!(parse_csv(b"x\n", 0).is_err());
        assert!(parse_csv(b"1\n2,3\n", 1).unwrap_err().contains("row 1"));
    }

    #[test]
    fn numbers_keep_seventeen_digits() {
        let x = 0.1 + 0.2;
        let s = fmt_num(x);
        assert_eq!(s.parse::<f64>().unwrap(), x);
        let v = to_json(&serde_json::json!({"a": x, "n": 3, "bad": f64::NAN}));
        assert_eq!(v["a"].to_string(), s);
        assert_eq!(v["n"].to_string(), "3");
        assert!(v["bad"].is_null());
    }
}
