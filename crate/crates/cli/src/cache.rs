//! Append-only run cache.
//!
//! One JSON record per line in `runs.jsonl` under the cache directory. A
//! record is written with a single append so concurrent readers either see
//! the whole line or none of it; lines that fail to parse are skipped.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const CACHE_DIR_ENV: &str = "KPROBE_CACHE_DIR";
const CACHE_FILE: &str = "runs.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub key: String,
    pub payload: Value,
    pub timestamp: u64,
}

/// Hash of the command, its full parameter set, the compressor and the
/// crate version.
pub fn run_key(command: &str, params: &Value, compressor: &str) -> String {
    let mut h = Sha256::new();
    for part in [
        command,
        &params.to_string(),
        compressor,
        env!("CARGO_PKG_VERSION"),
    ] {
        h.update(part.as_bytes());
        h.update([0u8]);
    }
    hex::encode(h.finalize())
}

pub struct RunCache {
    file: PathBuf,
}

impl RunCache {
    /// Cache under `$KPROBE_CACHE_DIR`, else `$XDG_CACHE_HOME/kprobe`, else
    /// `~/.cache/kprobe`. `None` when no location can be derived.
    pub fn from_env() -> Option<Self> {
        let dir = std::env::var_os(CACHE_DIR_ENV)
            .map(PathBuf::from)
            .or_else(|| std::env::var_os("XDG_CACHE_HOME").map(|d| Path::new(&d).join("kprobe")))
            .or_else(|| std::env::var_os("HOME").map(|d| Path::new(&d).join(".cache/kprobe")))?;
        Some(RunCache::in_dir(&dir))
    }

    pub fn in_dir(dir: &Path) -> Self {
        RunCache {
            file: dir.join(CACHE_FILE),
        }
    }

    pub fn lookup(&self, key: &str) -> Option<Value> {
        let text = fs::read_to_string(&self.file).ok()?;
        text.lines()
            .filter_map(|line| serde_json::from_str::<RunRecord>(line).ok())
            .find(|r| r.key == key)
            .map(|r| r.payload)
    }

    pub fn store(&self, key: &str, payload: &Value) -> std::io::Result<()> {
        if let Some(dir) = self.file.parent() {
            fs::create_dir_all(dir)?;
        }
        let record = RunRecord {
            key: key.to_string(),
            payload: payload.clone(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let mut line = serde_json::to_string(&record).map_err(std::io::Error::other)?;
        line.push('\n');
        let mut f = OpenOptions::new().create(true).append(true).open(&self.file)?;
        f.write_all(line.as_bytes())
    }
}
