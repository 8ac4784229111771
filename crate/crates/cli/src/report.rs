use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use serde_json::Value;

/// Round every float in a JSON tree to 9 significant digits. Non-finite values
/// are already `null` after serialization.
pub fn round9(v: Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => {
            let x = n.as_f64().unwrap_or(f64::NAN);
            let r: f64 = format!("{x:.8e}").parse().unwrap_or(x);
            serde_json::Number::from_f64(r).map_or(Value::Null, Value::Number)
        }
        Value::Array(a) => Value::Array(a.into_iter().map(round9).collect()),
        Value::Object(o) => Value::Object(o.into_iter().map(|(k, v)| (k, round9(v))).collect()),
        other => other,
    }
}

pub fn fmt9(x: f64) -> String {
    if x.is_finite() {
        let r: f64 = format!("{x:.8e}").parse().unwrap_or(x);
        r.to_string()
    } else {
        x.to_string()
    }
}

/// A report: JSON to stdout and, with `--out`, JSON and CSV files.
pub struct Report {
    name: &'static str,
    json: Value,
    table: Option<(Vec<&'static str>, Vec<Vec<f64>>)>,
    extra: Vec<(String, Value)>,
}

impl Report {
    pub fn new(name: &'static str, body: &impl Serialize) -> Result<Self> {
        Ok(Self {
            name,
            json: round9(serde_json::to_value(body)?),
            table: None,
            extra: Vec::new(),
        })
    }

    pub fn table(mut self, header: Vec<&'static str>, rows: Vec<Vec<f64>>) -> Self {
        self.table = Some((header, rows));
        self
    }

    /// Additional file written only with `--out`, e.g. a displacement field.
    /// Stored at full precision.
    pub fn attach(mut self, file: impl Into<String>, body: &impl Serialize) -> Result<Self> {
        self.extra.push((file.into(), serde_json::to_value(body)?));
        Ok(self)
    }

    pub fn emit(self, out: Option<&Path>) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.json)?;
        match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => return Err(e.into()),
            _ => {}
        }
        let Some(dir) = out else {
            return Ok(());
        };
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        let path = |f: &str| -> PathBuf { dir.join(f) };
        fs::write(path(&format!("{}.json", self.name)), serde_json::to_string_pretty(&self.json)? + "\n")?;
        if let Some((header, rows)) = &self.table {
            let mut w = csv::Writer::from_path(path(&format!("{}.csv", self.name)))?;
            w.write_record(header)?;
            for r in rows {
                w.write_record(r.iter().map(|v| fmt9(*v)))?;
            }
            w.flush()?;
        }
        for (f, v) in &self.extra {
            fs::write(path(f), serde_json::to_string(v)? + "\n")?;
        }
        Ok(())
    }
}
