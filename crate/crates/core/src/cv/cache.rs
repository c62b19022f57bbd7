//! Persistent verdict cache, stored as JSON lines.

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use crate::frontend::ast::UnwindingMode;
use crate::frontend::hash::Hash256;
use crate::pipeline::Status;
use crate::vcgen::PropertyKind;
use crate::witness::Counterexample;

pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct CacheKey {
    pub function_hash: Hash256,
    pub vc_id: String,
    pub bound: u32,
    pub unwinding_mode: UnwindingMode,
    pub encoding: String,
    pub solver: String,
    pub checks: BTreeSet<PropertyKind>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CachedVerdict {
    pub status: Status,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<Counterexample>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CacheEntry {
    pub key: CacheKey,
    pub verdict: CachedVerdict,
    pub timestamp: u64,
    pub tool_version: String,
}

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("{path}:{line}: {source}")]
    Parse { path: PathBuf, line: usize, source: serde_json::Error },
}

#[derive(Clone, Debug, Default)]
pub struct Cache {
    entries: HashMap<CacheKey, CacheEntry>,
}

impl Cache {
    pub fn new() -> Cache {
        Cache::default()
    }

    /// Later lines override earlier ones; a missing file is an empty cache.
    pub fn load(path: &Path) -> Result<Cache, CacheError> {
        let text = match std::fs::read_to_string(path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Cache::new()),
            Err(source) => return Err(CacheError::Io { path: path.into(), source }),
        };
        Cache::parse(&text).map_err(|(line, source)| CacheError::Parse { path: path.into(), line, source })
    }

    pub fn parse(text: &str) -> Result<Cache, (usize, serde_json::Error)> {
        let mut c = Cache::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let e: CacheEntry = serde_json::from_str(line).map_err(|e| (i + 1, e))?;
            c.entries.insert(e.key.clone(), e);
        }
        Ok(c)
    }

    pub fn get(&self, key: &CacheKey) -> Option<&CacheEntry> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: CacheKey, verdict: CachedVerdict) {
        let timestamp = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs());
        self.entries.insert(key.clone(), CacheEntry { key, verdict, timestamp, tool_version: TOOL_VERSION.into() });
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// One line per key, sorted by key.
    pub fn to_jsonl(&self) -> String {
        let mut rows: Vec<&CacheEntry> = self.entries.values().collect();
        rows.sort_by(|a, b| a.key.cmp(&b.key));
        let mut out = String::new();
        for r in rows {
            out.push_str(&serde_json::to_string(r).expect("cache entry serializes"));
            out.push('\n');
        }
        out
    }

    /// Rewrite the file compacted, via a sibling temp file and rename.
    pub fn save(&self, path: &Path) -> Result<(), CacheError> {
        let io = |source| CacheError::Io { path: path.into(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let tmp = path.with_extension("tmp");
        let mut f = std::fs::File::create(&tmp).map_err(io)?;
        f.write_all(self.to_jsonl().as_bytes()).map_err(io)?;
        f.sync_all().map_err(io)?;
        std::fs::rename(&tmp, path).map_err(io)
    }
}
