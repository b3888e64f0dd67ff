//! The on-disk replay store: recorded response texts keyed by prompt
//! content hash, with recording metadata.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::BackendError;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StoreMeta {
    pub model_name: String,
    pub recorded_at: String,
}

/// Map from prompt content hash to the recorded response text.
///
/// Lookups are exact-hash only. Entries serialize in sorted hash order so
/// store files diff cleanly between recordings.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReplayStore {
    pub meta: StoreMeta,
    entries: BTreeMap<String, String>,
}

impl ReplayStore {
    pub fn new(model_name: impl Into<String>) -> ReplayStore {
        ReplayStore {
            meta: StoreMeta {
                model_name: model_name.into(),
                recorded_at: utc_timestamp(),
            },
            entries: BTreeMap::new(),
        }
    }

    pub fn load(path: &Path) -> Result<ReplayStore, BackendError> {
        let text = std::fs::read_to_string(path).map_err(|e| BackendError::Storage {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        serde_json::from_str(&text).map_err(|e| BackendError::Storage {
            path: path.to_path_buf(),
            message: format!("malformed store: {e}"),
        })
    }

    /// Write the store atomically: serialize to a temporary file in the
    /// target directory, then rename over the destination.
    pub fn save(&self, path: &Path) -> Result<(), BackendError> {
        let storage_err = |message: String| BackendError::Storage {
            path: path.to_path_buf(),
            message,
        };
        let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
        if let Some(dir) = dir {
            std::fs::create_dir_all(dir).map_err(|e| storage_err(e.to_string()))?;
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| storage_err(e.to_string()))?;
        let tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or_else(|| Path::new(".")))
            .map_err(|e| storage_err(e.to_string()))?;
        std::fs::write(tmp.path(), json.as_bytes()).map_err(|e| storage_err(e.to_string()))?;
        tmp.persist(path)
            .map_err(|e| storage_err(e.error.to_string()))?;
        Ok(())
    }

    pub fn get(&self, hash: &str) -> Option<&str> {
        self.entries.get(hash).map(String::as_str)
    }

    /// Record one response. Re-recording the identical text is a no-op;
    /// a different text for an existing hash is a conflict and leaves the
    /// store unchanged.
    pub fn record(&mut self, hash: &str, text: &str) -> Result<bool, BackendError> {
        match self.entries.get(hash) {
            Some(existing) if existing == text => Ok(false),
            Some(_) => Err(BackendError::RecordConflict {
                hash: hash.to_string(),
            }),
            None => {
                self.entries.insert(hash.to_string(), text.to_string());
                Ok(true)
            }
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn hashes(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }
}

/// Current UTC time as an ISO-8601 string, computed from the system clock
/// without a calendar dependency.
fn utc_timestamp() -> String {
    let secs = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let (y, m, d) = civil_from_days((secs / 86_400) as i64);
    let rem = secs % 86_400;
    format!(
        "{y:04}-{m:02}-{d:02}T{:02}:{:02}:{:02}Z",
        rem / 3600,
        (rem % 3600) / 60,
        rem % 60
    )
}

/// Days-since-epoch to calendar date (proleptic Gregorian).
fn civil_from_days(z: i64) -> (i64, u32, u32) {
    let z = z + 719_468;
    let era = if z >= 0 { z } else { z - 146_096 } / 146_097;
    let doe = (z - era * 146_097) as u64;
    let yoe = (doe - doe / 1460 + doe / 36_524 - doe / 146_096) / 365;
    let y = yoe as i64 + era * 400;
    let doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    let mp = (5 * doy + 2) / 153;
    let d = (doy - (153 * mp + 2) / 5 + 1) as u32;
    let m = if mp < 10 { mp + 3 } else { mp - 9 } as u32;
    (if m <= 2 { y + 1 } else { y }, m, d)
}
