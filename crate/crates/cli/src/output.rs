use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use exomega_core::risk::ExtendedReal;
use serde_json::{json, Map, Value};

use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

/// Numbers as text: shortest round-trip form (exponent notation for very
/// small or large magnitudes), `inf`/`-inf`, empty for NaN.
pub fn num(v: f64) -> String {
    if v == 0.0 {
        "0".into()
    } else if v.is_nan() {
        String::new()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{v}")
    } else {
        format!("{v:?}")
    }
}

pub fn opt_num(v: Option<f64>) -> String {
    v.map(num).unwrap_or_default()
}

/// JSON numbers; non-finite values become the strings `"inf"`/`"-inf"`
/// and NaN becomes `null`.
pub fn jnum(v: f64) -> Value {
    if v == 0.0 {
        json!(0.0)
    } else if v.is_finite() {
        json!(v)
    } else if v.is_nan() {
        Value::Null
    } else {
        json!(num(v))
    }
}

pub fn jopt(v: Option<f64>) -> Value {
    v.map(jnum).unwrap_or(Value::Null)
}

pub fn ext_text(v: ExtendedReal) -> String {
    match v {
        ExtendedReal::Finite(x) => num(x),
        other => other.to_string(),
    }
}

pub fn ext_json(v: ExtendedReal) -> Value {
    match v {
        ExtendedReal::Finite(x) => jnum(x),
        other => json!(other.to_string()),
    }
}

pub fn jvec(v: &[f64]) -> Value {
    Value::Array(v.iter().map(|&x| jnum(x)).collect())
}

/// Top-level JSON object with the schema version and command name first.
pub fn envelope(command: &str, seed: Option<u64>, body: Map<String, Value>) -> Value {
    let mut m = Map::new();
    m.insert("schema_version".into(), json!(SCHEMA_VERSION));
    m.insert("command".into(), json!(command));
    if let Some(seed) = seed {
        m.insert("seed".into(), json!(seed));
    }
    m.extend(body);
    Value::Object(m)
}

pub fn json_text(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values always serialize");
    s.push('\n');
    s
}

pub fn csv_text(header: &[String], rows: &[Vec<String>]) -> Result<String, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).map_err(exomega_core::Error::from)?;
    for r in rows {
        w.write_record(r).map_err(exomega_core::Error::from)?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| CliError::Failed(format!("cannot finish CSV output: {e}")))?;
    Ok(String::from_utf8(bytes).expect("CSV output is UTF-8"))
}

/// Writes `text` to `out`, or to standard output.
pub fn emit(out: Option<&Path>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io {
            path: PathBuf::from(path),
            source,
        }),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(text.as_bytes())
                .and_then(|_| stdout.flush())
                .map_err(|source| CliError::Io {
                    path: PathBuf::from("<stdout>"),
                    source,
                })
        }
    }
}
