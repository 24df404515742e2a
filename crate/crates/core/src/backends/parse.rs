//! Parsers for judge replies. Each returns a typed value or a [`ParseError`];
//! none of them falls back to a default.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unparsable judge reply: {0}")]
pub struct ParseError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ThreeWayVerdict {
    Supported,
    Refuted,
    NotEnoughInfo,
}

impl ThreeWayVerdict {
    pub fn as_label(self) -> Option<Label> {
        match self {
            ThreeWayVerdict::Supported => Some(Label::Supported),
            ThreeWayVerdict::Refuted => Some(Label::Refuted),
            ThreeWayVerdict::NotEnoughInfo => None,
        }
    }
}

impl From<Label> for ThreeWayVerdict {
    fn from(l: Label) -> Self {
        match l {
            Label::Supported => ThreeWayVerdict::Supported,
            Label::Refuted => ThreeWayVerdict::Refuted,
        }
    }
}

/// Content of the last `<tag>...</tag>` block, matched case-insensitively.
fn last_block<'a>(text: &'a str, tag: &str) -> Option<&'a str> {
    let lower = text.to_ascii_lowercase();
    let open = format!("<{tag}>");
    let close = format!("</{tag}>");
    let start = lower.rfind(&open)? + open.len();
    let end = start + lower[start..].find(&close)?;
    Some(&text[start..end])
}

pub fn parse_binary_answer(text: &str) -> Result<u8, ParseError> {
    let body = last_block(text, "answer").ok_or_else(|| ParseError("no <answer> block".into()))?;
    match body.trim() {
        "0" => Ok(0),
        "1" => Ok(1),
        other => Err(ParseError(format!("answer {other:?} is not 0 or 1"))),
    }
}

/// The five binary atomicity criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Atomicity {
    pub is_question: bool,
    pub single_focus: bool,
    pub no_conjunctions: bool,
    pub verifiable: bool,
    pub grounded: bool,
}

impl Atomicity {
    pub const KEYS: [&'static str; 5] = [
        "is_question",
        "single_focus",
        "no_conjunctions",
        "verifiable",
        "grounded",
    ];

    pub fn all(v: bool) -> Self {
        Self {
            is_question: v,
            single_focus: v,
            no_conjunctions: v,
            verifiable: v,
            grounded: v,
        }
    }

    pub fn passed(&self) -> usize {
        [
            self.is_question,
            self.single_focus,
            self.no_conjunctions,
            self.verifiable,
            self.grounded,
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }

    /// Fraction of criteria passed.
    pub fn fraction(&self) -> f64 {
        self.passed() as f64 / 5.0
    }
}

pub fn parse_atomicity(text: &str) -> Result<Atomicity, ParseError> {
    let body = last_block(text, "answer").unwrap_or("");
    let mut values: [Option<bool>; 5] = [None; 5];
    for line in body.lines() {
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = key
            .trim()
            .trim_matches(|c: char| c == '*' || c == '-')
            .trim()
            .to_ascii_lowercase();
        let Some(idx) = Atomicity::KEYS.iter().position(|k| *k == key) else {
            continue;
        };
        let value = value
            .trim()
            .trim_matches(|c: char| !c.is_alphanumeric())
            .to_ascii_uppercase();
        values[idx] = match value.as_str() {
            "YES" => Some(true),
            "NO" => Some(false),
            _ => None,
        };
    }
    let get = |i: usize| values[i].ok_or_else(|| ParseError(Atomicity::KEYS[i].to_string()));
    Ok(Atomicity {
        is_question: get(0)?,
        single_focus: get(1)?,
        no_conjunctions: get(2)?,
        verifiable: get(3)?,
        grounded: get(4)?,
    })
}

pub fn parse_verdict(text: &str) -> Result<ThreeWayVerdict, ParseError> {
    let body = last_block(text, "verdict").ok_or_else(|| ParseError("no <verdict> block".into()))?;
    let norm = body
        .trim()
        .trim_matches(|c: char| !c.is_alphanumeric())
        .to_ascii_lowercase()
        .replace('_', " ");
    let norm = norm.split_whitespace().collect::<Vec<_>>().join(" ");
    match norm.as_str() {
        "supported" => Ok(ThreeWayVerdict::Supported),
        "refuted" => Ok(ThreeWayVerdict::Refuted),
        "not enough information" | "not enough info" | "nei" => Ok(ThreeWayVerdict::NotEnoughInfo),
        _ => Err(ParseError(format!("verdict {:?}", body.trim()))),
    }
}

/// Questions in a silver-decomposition reply: list items (`1.`, `1)`, `-`,
/// `*`, `Q1:`) or bare lines ending in `?`.
pub fn parse_question_list(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (stripped, enumerated) = strip_enumerator(line);
        let q = stripped.trim();
        if q.is_empty() {
            continue;
        }
        if q.ends_with('?') || (enumerated && !q.ends_with(':')) {
            out.push(q.to_string());
        }
    }
    out
}

fn strip_enumerator(line: &str) -> (&str, bool) {
    for bullet in ["- ", "* ", "• "] {
        if let Some(rest) = line.strip_prefix(bullet) {
            return (rest, true);
        }
    }
    let rest = line
        .strip_prefix('Q')
        .or_else(|| line.strip_prefix('q'))
        .unwrap_or(line);
    let digits = rest.chars().take_while(|c| c.is_ascii_digit()).count();
    if digits > 0 {
        let after = &rest[digits..];
        for sep in [". ", ") ", ": ", "."] {
            if let Some(r) = after.strip_prefix(sep) {
                return (r, true);
            }
        }
    }
    (line, false)
}
