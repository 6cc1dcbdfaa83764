//! CSV and JSON writers for figure data and solver reports. Output is a
//! pure function of its input: fixed column order, shortest round-trip float
//! formatting, and a trailing newline.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;
use serde_json::Value;

use crate::error::{Error, Result};

fn output_error(path: &Path, reason: impl ToString) -> Error {
    Error::Output { path: path.display().to_string(), reason: reason.to_string() }
}

/// CSV text with a header row taken from the field names of `R`. An empty
/// slice gives an empty string.
pub fn csv_string<R: Serialize>(rows: &[R]) -> Result<String> {
    let mut writer = csv::Writer::from_writer(Vec::new());
    for row in rows {
        writer.serialize(row).map_err(|e| output_error(Path::new("<memory>"), e))?;
    }
    let bytes = writer.into_inner().map_err(|e| output_error(Path::new("<memory>"), e))?;
    Ok(String::from_utf8(bytes).expect("csv output is UTF-8"))
}

pub fn write_csv<R: Serialize>(path: &Path, rows: &[R]) -> Result<()> {
    let text = csv_string(rows)?;
    fs::write(path, text).map_err(|e| output_error(path, e))
}

/// Pretty-printed JSON followed by a newline.
pub fn json_string(value: &Value) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    text.push('\n');
    text
}

pub fn write_json(path: &Path, value: &Value) -> Result<()> {
    let mut file = fs::File::create(path).map_err(|e| output_error(path, e))?;
    file.write_all(json_string(value).as_bytes()).map_err(|e| output_error(path, e))
}

/// Serializes a flag as `0`/`1` in CSV output.
pub(crate) fn bool_as_int<S: serde::Serializer>(flag: &bool, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_u8(u8::from(*flag))
}
