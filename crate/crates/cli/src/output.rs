//! File writers. CSV files open with `#` comment lines carrying the config
//! hash and units; JSON goes through `serde_json::Value`, whose maps keep
//! keys sorted.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::CliError;

pub fn comment(hash: &str, units: &str) -> String {
    format!(
        "fvi {}\nconfig_hash={hash}\nunits: {units}",
        env!("CARGO_PKG_VERSION")
    )
}

/// `comment` as `# ` lines.
pub fn csv_header(hash: &str, units: &str) -> String {
    comment(hash, units)
        .lines()
        .map(|l| format!("# {l}\n"))
        .collect()
}

pub fn write_text(dir: &Path, name: &str, text: &str) -> Result<PathBuf, CliError> {
    let path = dir.join(name);
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, name: &str, value: &T) -> Result<PathBuf, CliError> {
    let v = serde_json::to_value(value).map_err(|e| CliError::config(format!("{name}: {e}")))?;
    let mut text = serde_json::to_string_pretty(&v).expect("JSON values serialize");
    text.push('\n');
    write_text(dir, name, &text)
}

/// Cell for an optional number: empty when absent.
pub fn cell(v: Option<f64>) -> String {
    v.map(fvi_core::export::fmt_f64).unwrap_or_default()
}
