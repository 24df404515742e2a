//! Claim corpora: ingestion, label normalization and the text statistics the
//! rule filters consume.

mod ner;
mod tokenize;

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use ner::{entity_count, CapitalizedSpanNer, EntityCounter, UnionNer};
pub use tokenize::{content_tokens, count_tokens, lexical_overlap, tokens, TokenCount, STOPWORDS};

/// Two-way verdict.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Label {
    Supported,
    Refuted,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Supported => "Supported",
            Label::Refuted => "Refuted",
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Supported => Label::Refuted,
            Label::Refuted => Label::Supported,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    /// Accepts the canonical names in any case.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "supported" => Ok(Label::Supported),
            "refuted" => Ok(Label::Refuted),
            _ => Err(s.to_string()),
        }
    }
}

/// One (claim, evidence, optional gold label) row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClaimRecord {
    pub id: String,
    pub claim: String,
    pub evidence: Vec<String>,
    pub label: Option<Label>,
    pub source: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub silver_question_count: Option<u32>,
}

impl ClaimRecord {
    /// Evidence passages joined into the single document the policy and
    /// judges see.
    pub fn document(&self) -> String {
        self.evidence.join("\n\n")
    }

    pub fn evidence_tokens(&self) -> usize {
        self.evidence.iter().map(|p| count_tokens(p).0).sum()
    }
}

/// Maps native verdict strings (case-insensitive) onto [`Label`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    table: HashMap<String, Label>,
}

impl Default for LabelMap {
    fn default() -> Self {
        use Label::*;
        let pairs = [
            ("supported", Supported),
            ("supports", Supported),
            ("support", Supported),
            ("true", Supported),
            ("entailment", Supported),
            ("entailed", Supported),
            ("correct", Supported),
            ("yes", Supported),
            ("1", Supported),
            ("refuted", Refuted),
            ("refutes", Refuted),
            ("refute", Refuted),
            ("false", Refuted),
            ("contradiction", Refuted),
            ("contradicted", Refuted),
            ("incorrect", Refuted),
            ("not_supported", Refuted),
            ("unsupported", Refuted),
            ("no", Refuted),
            ("0", Refuted),
        ];
        Self::from_pairs(pairs)
    }
}

impl LabelMap {
    pub fn empty() -> Self {
        Self { table: HashMap::new() }
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Label)>) -> Self {
        let table = pairs.into_iter().map(|(k, v)| (k.trim().to_lowercase(), v)).collect();
        Self { table }
    }

    /// Loads a JSON object of `{"native": "Supported"|"Refuted"}`.
    pub fn from_json(text: &str) -> Result<Self, String> {
        let raw: BTreeMap<String, String> = serde_json::from_str(text).map_err(|e| e.to_string())?;
        let mut table = HashMap::new();
        for (k, v) in raw {
            let label = v
                .parse::<Label>()
                .map_err(|v| format!("bad target label {v:?} for {k:?}"))?;
            table.insert(k.trim().to_lowercase(), label);
        }
        Ok(Self { table })
    }

    pub fn insert(&mut self, native: &str, label: Label) {
        self.table.insert(native.trim().to_lowercase(), label);
    }

    pub fn get(&self, native: &str) -> Option<Label> {
        self.table.get(&native.trim().to_lowercase()).copied()
    }
}

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum CorpusError {
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error("{path}:{line}: malformed record: {message}")]
    Malformed { path: String, line: usize, message: String },
    #[error("{path}:{line}: duplicate id {id:?}")]
    DuplicateId { path: String, line: usize, id: String },
    #[error("{path}:{line}: unknown label {label:?}")]
    UnknownLabel { path: String, line: usize, label: String },
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    claim: String,
    evidence: Vec<String>,
    #[serde(default)]
    label: Option<serde_json::Value>,
    source: String,
    #[serde(default)]
    meta: Option<BTreeMap<String, serde_json::Value>>,
    #[serde(default)]
    silver_question_count: Option<u32>,
}

/// Parses one JSONL claim line. `line` is only used for error positions.
pub fn parse_claim_line(text: &str, label_map: &LabelMap, path: &str, line: usize) -> Result<ClaimRecord, CorpusError> {
    let malformed = |message: String| CorpusError::Malformed {
        path: path.to_string(),
        line,
        message,
    };
    let raw: RawRecord = serde_json::from_str(text).map_err(|e| malformed(e.to_string()))?;
    if raw.id.trim().is_empty() {
        return Err(malformed("empty id".into()));
    }
    if raw.silver_question_count == Some(0) {
        return Err(malformed("silver_question_count must be >= 1".into()));
    }
    let label = match raw.label {
        None | Some(serde_json::Value::Null) => None,
        Some(v) => {
            let native = match v {
                serde_json::Value::String(s) => s,
                serde_json::Value::Number(n) => n.to_string(),
                serde_json::Value::Bool(b) => b.to_string(),
                other => return Err(malformed(format!("label must be a string, got {other}"))),
            };
            match label_map.get(&native) {
                Some(l) => Some(l),
                None => {
                    return Err(CorpusError::UnknownLabel {
                        path: path.to_string(),
                        line,
                        label: native,
                    })
                }
            }
        }
    };
    let meta = raw
        .meta
        .unwrap_or_default()
        .into_iter()
        .map(|(k, v)| match v {
            serde_json::Value::String(s) => (k, s),
            other => (k, other.to_string()),
        })
        .collect();
    Ok(ClaimRecord {
        id: raw.id,
        claim: raw.claim,
        evidence: raw.evidence,
        label,
        source: raw.source,
        meta,
        silver_question_count: raw.silver_question_count,
    })
}

/// Reads a claims JSONL file in file order, mapping labels through `label_map`.
pub fn ingest_claims(path: &Path, label_map: &LabelMap) -> Result<Vec<ClaimRecord>, CorpusError> {
    let p = path.display().to_string();
    let lines = crate::io::read_lines(path).map_err(|e| CorpusError::Io {
        path: p.clone(),
        message: e.to_string(),
    })?;
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(lines.len());
    for (n, line) in lines {
        let rec = parse_claim_line(&line, label_map, &p, n)?;
        if !seen.insert(rec.id.clone()) {
            return Err(CorpusError::DuplicateId {
                path: p,
                line: n,
                id: rec.id,
            });
        }
        out.push(rec);
    }
    Ok(out)
}
