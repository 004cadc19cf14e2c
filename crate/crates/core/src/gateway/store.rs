//! Append-only prediction cache, one file per model id.
//!
//! Each line is a prediction record plus a digest of the request it
//! answered, so an edited vignette never reuses a stale answer. Corrupt
//! lines (an interrupted write) are skipped and dropped at the next
//! compaction. One process should own a cache file at a time.

use super::protocol::Request;
use super::runner::PredictionRecord;
use crate::dataset::VariantInstance;
use crate::digest::sha256_hex;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Mutex;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct CacheEntry {
    #[serde(flatten)]
    record: PredictionRecord,
    request_digest: String,
}

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("cache {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

pub struct PredictionStore {
    path: PathBuf,
    model_id: String,
    entries: Mutex<BTreeMap<String, CacheEntry>>,
    log: Mutex<File>,
}

pub fn request_digest(item: &VariantInstance) -> String {
    sha256_hex(Request::for_instance(item).to_line())[..16].to_string()
}

/// File name for a model: sanitized id plus a short hash of the raw id.
pub fn cache_file_name(model_id: &str) -> String {
    let clean: String = model_id
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect();
    format!("{clean}-{}.jsonl", &sha256_hex(model_id)[..8])
}

impl PredictionStore {
    pub fn open(dir: &Path, model_id: &str) -> Result<Self, StoreError> {
        let path = dir.join(cache_file_name(model_id));
        let io = |source| StoreError::Io {
            path: path.display().to_string(),
            source,
        };
        std::fs::create_dir_all(dir).map_err(io)?;
        let mut entries = BTreeMap::new();
        let mut dirty = false;
        if path.exists() {
            let file = File::open(&path).map_err(io)?;
            for (idx, line) in BufReader::new(file).lines().enumerate() {
                let line = line.map_err(io)?;
                match serde_json::from_str::<CacheEntry>(&line) {
                    Ok(e) if e.record.model_id == model_id && e.record.chosen <= 3 => {
                        dirty |= entries.insert(e.record.variant_id.clone(), e).is_some();
                    }
                    _ => {
                        log::warn!("{}: skipping unreadable cache line {}", path.display(), idx + 1);
                        dirty = true;
                    }
                }
            }
        }
        let log = OpenOptions::new().create(true).append(true).open(&path).map_err(io)?;
        let store = Self {
            path,
            model_id: model_id.to_string(),
            entries: Mutex::new(entries),
            log: Mutex::new(log),
        };
        if dirty {
            store.compact()?;
        }
        Ok(store)
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    pub fn len(&self) -> usize {
        self.entries.lock().unwrap().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cached answer for exactly this request text, if any.
    pub fn lookup(&self, item: &VariantInstance) -> Option<PredictionRecord> {
        let entries = self.entries.lock().unwrap();
        let e = entries.get(&item.variant_id)?;
        (e.request_digest == request_digest(item)).then(|| e.record.clone())
    }

    /// Append one record and flush it. Safe to call from many threads.
    pub fn append(&self, record: &PredictionRecord, item: &VariantInstance) -> Result<(), StoreError> {
        debug_assert_eq!(record.model_id, self.model_id);
        let entry = CacheEntry {
            record: record.clone(),
            request_digest: request_digest(item),
        };
        let line = serde_json::to_string(&entry).expect("cache entry serializes");
        {
            let mut log = self.log.lock().unwrap();
            writeln!(log, "{line}")
                .and_then(|_| log.flush())
                .map_err(|source| StoreError::Io {
                    path: self.path.display().to_string(),
                    source,
                })?;
        }
        self.entries.lock().unwrap().insert(record.variant_id.clone(), entry);
        Ok(())
    }

    /// Rewrite the log with one line per variant, via a temp file and an
    /// atomic rename.
    pub fn compact(&self) -> Result<(), StoreError> {
        let io = |source| StoreError::Io {
            path: self.path.display().to_string(),
            source,
        };
        let mut log = self.log.lock().unwrap();
        let entries = self.entries.lock().unwrap();
        let tmp = self.path.with_extension("jsonl.tmp");
        {
            let mut w = BufWriter::new(File::create(&tmp).map_err(io)?);
            for e in entries.values() {
                let line = serde_json::to_string(e).expect("cache entry serializes");
                writeln!(w, "{line}").map_err(io)?;
            }
            w.into_inner().map_err(|e| io(e.into_error()))?.sync_all().map_err(io)?;
        }
        std::fs::rename(&tmp, &self.path).map_err(io)?;
        *log = OpenOptions::new().append(true).open(&self.path).map_err(io)?;
        Ok(())
    }
}
