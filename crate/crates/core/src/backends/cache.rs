use std::fs;
use std::io::ErrorKind;
use std::path::{Path, PathBuf};

use serde_json::{json, Value};
use sha2::{Digest, Sha256};

use super::{BackendError, DecodingParams, TemplateId};

/// SHA-256 over a namespace and length-prefixed request fields.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CacheKey([u8; 32]);

impl CacheKey {
    pub fn from_parts(namespace: &str, parts: &[&[u8]]) -> Self {
        let mut h = Sha256::new();
        for part in std::iter::once(namespace.as_bytes()).chain(parts.iter().copied()) {
            h.update((part.len() as u64).to_le_bytes());
            h.update(part);
        }
        CacheKey(h.finalize().into())
    }

    pub fn for_judge(template: Option<TemplateId>, prompt: &str, backend: &str, params: &DecodingParams) -> Self {
        let template = template.map(|t| t.as_str()).unwrap_or("");
        Self::from_parts(
            "judge",
            &[
                template.as_bytes(),
                prompt.as_bytes(),
                backend.as_bytes(),
                &params.temperature.to_bits().to_le_bytes(),
                &params.seed.to_le_bytes(),
                &params.max_tokens.to_le_bytes(),
            ],
        )
    }

    pub fn hex(&self) -> String {
        hex::encode(self.0)
    }
}

/// One JSON file per key under two-hex-char shard directories. A key is
/// written at most once: the first writer wins and later writers get the
/// stored response back.
#[derive(Debug, Clone)]
pub struct DiskCache {
    root: PathBuf,
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> BackendError {
    BackendError::Cache(format!("{}: {e}", path.display()))
}

impl DiskCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn path_for(&self, key: &CacheKey) -> PathBuf {
        let hex = key.hex();
        self.root.join(&hex[..2]).join(format!("{hex}.json"))
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<Value>, BackendError> {
        let path = self.path_for(key);
        match fs::read(&path) {
            Ok(bytes) => {
                let v: Value = serde_json::from_slice(&bytes).map_err(|e| cache_err(&path, e))?;
                v.get("response")
                    .cloned()
                    .map(Some)
                    .ok_or_else(|| cache_err(&path, "entry without response"))
            }
            Err(e) if e.kind() == ErrorKind::NotFound => Ok(None),
            Err(e) => Err(cache_err(&path, e)),
        }
    }

    /// Stores `response` unless the key already exists; returns whichever
    /// response is on disk afterwards.
    pub fn put(&self, key: &CacheKey, meta: Value, response: Value) -> Result<Value, BackendError> {
        let path = self.path_for(key);
        let dir = path.parent().expect("sharded path has a parent");
        fs::create_dir_all(dir).map_err(|e| cache_err(dir, e))?;
        let entry = json!({ "key": key.hex(), "request": meta, "response": response });
        let body = serde_json::to_vec_pretty(&entry).map_err(|e| cache_err(&path, e))?;
        let tmp = dir.join(format!(
            ".{}.{}.{:?}.tmp",
            key.hex(),
            std::process::id(),
            std::thread::current().id()
        ));
        fs::write(&tmp, &body).map_err(|e| cache_err(&tmp, e))?;
        let linked = fs::hard_link(&tmp, &path);
        let _ = fs::remove_file(&tmp);
        match linked {
            Ok(()) => Ok(response),
            Err(e) if e.kind() == ErrorKind::AlreadyExists => self
                .get(key)?
                .ok_or_else(|| cache_err(&path, "entry vanished after write race")),
            Err(e) => Err(cache_err(&path, e)),
        }
    }
}
