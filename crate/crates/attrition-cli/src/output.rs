//! Output files: JSON and CSV at 15 significant digits, and the run
//! manifest written last into every output directory.

use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use crate::CliError;

pub const MANIFEST: &str = "manifest.json";

/// Rounds to 15 significant digits; non-finite values pass through.
pub fn sig15(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.14e}").parse().expect("formatted float parses")
}

/// Number for a CSV cell; exponent form outside `[1e-4, 1e15)`.
pub fn cell(x: f64) -> String {
    let r = sig15(x);
    if x.is_nan() {
        String::new()
    } else if r == 0.0 || (1e-4..1e15).contains(&r.abs()) {
        format!("{r}")
    } else {
        format!("{r:e}")
    }
}

fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) if n.is_f64() => {
            let x = n.as_f64().expect("f64 number");
            *v = serde_json::Number::from_f64(sig15(x)).map_or(Value::Null, Value::Number);
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

/// Pretty JSON with every float rounded to 15 significant digits.
pub fn render_json(value: &Value) -> String {
    let mut v = value.clone();
    round_value(&mut v);
    let mut text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    text.push('\n');
    text
}

/// Compact single-line form of [`render_json`].
pub fn render_json_line(value: &Value) -> String {
    let mut v = value.clone();
    round_value(&mut v);
    serde_json::to_string(&v).expect("JSON values serialize")
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one command run and finishes with the manifest.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
    started: String,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<OutputDir, CliError> {
        fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            written: Vec::new(),
            started: now(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        self.written.push(name.to_string());
        Ok(())
    }

    pub fn write_json(&mut self, name: &str, value: &Value) -> Result<(), CliError> {
        self.write(name, &render_json(value))
    }

    /// Writes the manifest; `input` is the raw input file, if any.
    pub fn finish(self, command: &str, input: Option<(&Path, &[u8], Option<Value>)>, seed: Option<u64>) -> Result<(), CliError> {
        let argv: Vec<String> = std::env::args().collect();
        let input = input.map(|(path, bytes, document)| {
            json!({
                "path": path.display().to_string(),
                "sha256": digest(bytes),
                "document": document,
            })
        });
        let manifest = json!({
            "command": command,
            "argv": argv,
            "input": input,
            "seed": seed,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "threads": rayon_threads(),
            "started_at": self.started,
            "finished_at": now(),
            "outputs": self.written,
        });
        let path = self.dir.join(MANIFEST);
        fs::write(&path, render_json(&manifest)).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
    }
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

fn rayon_threads() -> Option<usize> {
    std::env::var(crate::THREADS_ENV).ok().and_then(|v| v.parse().ok())
}

/// CSV from a header and rows of numbers.
pub fn numeric_csv(header: &[&str], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let mut out = header.join(",");
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row.into_iter().map(cell).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    out
}
