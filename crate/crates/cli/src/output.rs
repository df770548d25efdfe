use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{json, Value};

use crate::{Cli, VERSION};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or parameters the library rejects.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        2
    }

    pub fn to_json(&self) -> String {
        let kind = match self {
            CliError::Usage(_) => "usage",
            CliError::Io { .. } => "io",
        };
        json!({ "error": kind, "message": self.to_string(), "exitCode": self.exit_code() }).to_string()
    }

    pub(crate) fn usage(e: impl std::fmt::Display) -> Self {
        CliError::Usage(e.to_string())
    }

    pub(crate) fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io { path: path.to_path_buf(), message: e.to_string() }
    }
}

/// Result of one pipeline run.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub command: &'static str,
    /// False on any certificate failure.
    pub pass: bool,
    pub failures: Vec<String>,
    pub summary: Vec<(String, String)>,
    /// Bytes for stdout when no output path was given (or a manifest for directory outputs).
    pub stdout: Option<Vec<u8>>,
    pub artifacts: Vec<PathBuf>,
}

impl RunOutput {
    pub fn summary_table(&self) -> String {
        let w = self.summary.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
        let mut s = String::new();
        for (k, v) in &self.summary {
            s.push_str(&format!("{k:<w$}  {v}\n"));
        }
        s
    }

    pub fn failure_json(&self) -> String {
        json!({ "error": "certificate", "command": self.command, "failures": self.failures, "exitCode": 1 }).to_string()
    }
}

/// A plot-ready table for `--format csv`.
pub(crate) struct Table {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(headers: &[&str]) -> Self {
        Table { headers: headers.iter().map(|h| h.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }

    /// Two-column key/value rows from a flattened JSON document.
    pub fn flattened(v: &Value) -> Self {
        let mut t = Table::new(&["key", "value"]);
        flatten("", v, &mut t.rows);
        t
    }

    pub fn to_csv(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(CliError::usage)?;
        for r in &self.rows {
            w.write_record(r).map_err(CliError::usage)?;
        }
        w.into_inner().map_err(CliError::usage)
    }
}

fn flatten(prefix: &str, v: &Value, out: &mut Vec<Vec<String>>) {
    match v {
        Value::Object(m) => {
            for (k, x) in m {
                let p = if prefix.is_empty() { k.clone() } else { format!("{prefix}.{k}") };
                flatten(&p, x, out);
            }
        }
        Value::Array(a) => {
            for (k, x) in a.iter().enumerate() {
                flatten(&format!("{prefix}[{k}]"), x, out);
            }
        }
        Value::String(s) => out.push(vec![prefix.to_string(), s.clone()]),
        other => out.push(vec![prefix.to_string(), other.to_string()]),
    }
}

/// Wraps a result with the tool version and the full configuration.
pub(crate) fn envelope(cli: &Cli, result: &impl Serialize) -> Result<Vec<u8>, CliError> {
    let doc = json!({
        "tool": "holdim",
        "version": VERSION,
        "command": cli.command_name(),
        "config": cli,
        "result": result,
    });
    let mut bytes = serde_json::to_vec_pretty(&doc).map_err(CliError::usage)?;
    bytes.push(b'\n');
    Ok(bytes)
}

pub(crate) fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

/// Reads an artifact, unwrapping the envelope and then `field` when present.
pub(crate) fn load<T: DeserializeOwned>(path: &Path, field: Option<&str>) -> Result<T, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut v: Value = serde_json::from_str(&text).map_err(|e| CliError::io(path, e))?;
    if v.get("tool").and_then(Value::as_str) == Some("holdim") {
        v = v["result"].take();
    }
    if let Some(f) = field {
        if let Some(inner) = v.get_mut(f) {
            v = inner.take();
        }
    }
    serde_json::from_value(v).map_err(|e| CliError::io(path, e))
}
