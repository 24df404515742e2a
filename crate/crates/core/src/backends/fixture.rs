use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use super::BackendError;

pub fn sha256_hex(text: &str) -> String {
    hex::encode(Sha256::digest(text.as_bytes()))
}

/// Canonical request text for the difficulty verifier.
pub fn verifier_request_text(claim: &str, document: &str) -> String {
    format!("{claim}\n\n{document}")
}

#[derive(Debug, Serialize, Deserialize)]
struct FixtureLine {
    digest: String,
    response: Value,
}

/// Canned responses keyed by the SHA-256 hex digest of the request text
/// (the prompt for judges, the input text for embedders and NER).
#[derive(Debug, Clone, Default)]
pub struct FixtureSet {
    entries: HashMap<String, Value>,
}

impl FixtureSet {
    pub fn load(path: &Path) -> Result<Self, BackendError> {
        let rows: Vec<FixtureLine> =
            crate::io::read_jsonl(path).map_err(|e| BackendError::Protocol(format!("fixture file: {e}")))?;
        Ok(Self {
            entries: rows.into_iter().map(|r| (r.digest, r.response)).collect(),
        })
    }

    pub fn insert_text(&mut self, request: &str, response: Value) {
        self.entries.insert(sha256_hex(request), response);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn lookup(&self, request: &str) -> Result<&Value, BackendError> {
        let digest = sha256_hex(request);
        self.entries.get(&digest).ok_or(BackendError::FixtureMiss(digest))
    }

    /// Serializes as JSONL sorted by digest.
    pub fn to_jsonl(&self) -> String {
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        let rows: Vec<FixtureLine> = keys
            .into_iter()
            .map(|k| FixtureLine {
                digest: k.clone(),
                response: self.entries[k].clone(),
            })
            .collect();
        crate::io::to_jsonl(&rows).expect("fixture rows serialize")
    }
}
