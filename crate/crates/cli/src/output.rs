//! Output envelopes and tolerant input readers.
//!
//! Every file the tool writes is `{"metadata": {...}, "result": ...}`. The
//! timestamp lives only in `metadata`, so `result` is byte-identical across
//! reruns with the same inputs and seed.

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use arrange_core::io::{read_json, to_json_string};
use arrange_core::planner::PlanResult;
use arrange_core::{Arrangement, Error, Result};
use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::Value;
use time::format_description::well_known::Rfc3339;
use time::OffsetDateTime;

#[derive(Debug, Serialize)]
pub struct Metadata {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub generated_at: String,
}

#[derive(Debug, Serialize)]
struct Envelope<'a, T: Serialize> {
    metadata: Metadata,
    result: &'a T,
}

/// `SOURCE_DATE_EPOCH` when set, the wall clock otherwise.
fn timestamp() -> String {
    let secs = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse::<i64>().ok())
        .unwrap_or_else(|| {
            SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs() as i64)
                .unwrap_or(0)
        });
    OffsetDateTime::from_unix_timestamp(secs)
        .ok()
        .and_then(|t| t.format(&Rfc3339).ok())
        .unwrap_or_else(|| secs.to_string())
}

pub struct OutputDir {
    root: PathBuf,
}

impl OutputDir {
    pub fn new(root: impl Into<PathBuf>) -> Result<Self> {
        let root = root.into();
        std::fs::create_dir_all(&root).map_err(|source| Error::Io {
            path: root.clone(),
            source,
        })?;
        Ok(OutputDir { root })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.root.join(name)
    }

    /// Writes `value` wrapped in an envelope and returns the file path.
    pub fn write<T: Serialize>(&self, name: &str, command: &str, value: &T) -> Result<PathBuf> {
        let envelope = Envelope {
            metadata: Metadata {
                tool: "arrange",
                version: env!("CARGO_PKG_VERSION"),
                command: command.to_string(),
                generated_at: timestamp(),
            },
            result: value,
        };
        self.write_text(name, &to_json_string(&envelope))
    }

    pub fn write_text(&self, name: &str, text: &str) -> Result<PathBuf> {
        let path = self.path(name);
        std::fs::write(&path, text).map_err(|source| Error::Io {
            path: path.clone(),
            source,
        })?;
        Ok(path)
    }
}

/// The payload of an envelope, or the whole document if it is not one.
fn unwrap_envelope(value: Value) -> Value {
    match value {
        Value::Object(mut map) if map.contains_key("metadata") && map.contains_key("result") => {
            map.remove("result").expect("checked")
        }
        other => other,
    }
}

fn decode<T: DeserializeOwned>(path: &Path, value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|source| Error::Json {
        path: path.to_path_buf(),
        source,
    })
}

/// Reads a bare document or the `result` of an envelope written by this tool.
pub fn read_payload<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let value: Value = read_json(path)?;
    decode(path, unwrap_envelope(value))
}

/// Accepts an arrangement, a plan result, or an exact-solver result.
pub fn read_arrangement(path: &Path) -> Result<Arrangement> {
    let value = unwrap_envelope(read_json::<Value>(path)?);
    if value.get("trajectory").is_some() {
        let plan: PlanResult = decode(path, value)?;
        return Ok(plan.final_arrangement);
    }
    match value {
        Value::Object(mut map) if map.contains_key("final") => decode(path, map.remove("final").expect("checked")),
        other => decode(path, other),
    }
}
