//! Artifact file names and atomic reads/writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::de::DeserializeOwned;
use serde::Serialize;

pub const TRAIN: &str = "train.json";
pub const TEST: &str = "test.json";
pub const TIERS: &str = "tiers.json";
pub const FOLDS: &str = "folds.json";
pub const DIFFICULTY: &str = "difficulty.jsonl";
pub const BUCKETS: &str = "buckets.jsonl";
pub const SCHEDULE: &str = "schedule.json";
pub const COMPARISON: &str = "comparison.json";
pub const COMPARISON_TABLE: &str = "comparison.txt";

pub fn checkpoint(arm: &str) -> String {
    format!("checkpoint-{arm}.json")
}

pub fn losses(arm: &str) -> String {
    format!("losses-{arm}.json")
}

pub fn report(arm: &str) -> String {
    format!("report-{arm}.json")
}

/// Writes `bytes` to a temporary file beside `path` and renames it into
/// place, so readers never observe a partial artifact.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().filter(|d| !d.as_os_str().is_empty()).unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).with_context(|| format!("cannot write {}", path.display()))?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read(path: &Path) -> anyhow::Result<Vec<u8>> {
    std::fs::read(path).with_context(|| format!("cannot read {}", path.display()))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let bytes = read(path)?;
    serde_json::from_slice(&bytes).with_context(|| format!("malformed {}", path.display()))
}

/// `report-*.json` files directly inside `dir`, sorted by name.
pub fn find_reports(dir: &Path) -> anyhow::Result<Vec<PathBuf>> {
    let mut found = Vec::new();
    for entry in std::fs::read_dir(dir).with_context(|| format!("cannot list {}", dir.display()))? {
        let path = entry?.path();
        let name = path.file_name().and_then(|n| n.to_str()).unwrap_or("");
        if name.starts_with("report-") && name.ends_with(".json") {
            found.push(path);
        }
    }
    found.sort();
    Ok(found)
}
