use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Number of tokenizer units in a text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct TokenCount(pub usize);

/// Whitespace split, then leading/trailing non-alphanumerics stripped. Empty
/// residues are dropped.
pub fn tokens(text: &str) -> impl Iterator<Item = &str> {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()))
        .filter(|t| !t.is_empty())
}

pub fn count_tokens(text: &str) -> TokenCount {
    TokenCount(tokens(text).count())
}

/// Small English stopword list used by [`lexical_overlap`].
pub const STOPWORDS: &[&str] = &[
    "a", "about", "after", "all", "also", "an", "and", "any", "are", "as", "at", "be", "been", "before", "being",
    "but", "by", "can", "could", "did", "do", "does", "for", "from", "had", "has", "have", "he", "her", "his", "how",
    "i", "if", "in", "into", "is", "it", "its", "more", "most", "no", "not", "of", "on", "only", "or", "other", "our",
    "she", "so", "some", "such", "than", "that", "the", "their", "them", "then", "there", "these", "they", "this",
    "those", "to", "was", "we", "were", "what", "when", "where", "which", "while", "who", "whom", "why", "will",
    "with", "would", "you",
];

/// Distinct lowercased tokens minus stopwords.
pub fn content_tokens(text: &str) -> HashSet<String> {
    tokens(text)
        .map(|t| t.to_lowercase())
        .filter(|t| !STOPWORDS.contains(&t.as_str()))
        .collect()
}

/// Fraction of the claim's distinct content tokens present in the evidence.
///
/// A claim with no content tokens is vacuously contained (1.0).
pub fn lexical_overlap(claim: &str, evidence: &str) -> f64 {
    let c = content_tokens(claim);
    if c.is_empty() {
        return 1.0;
    }
    let e: HashSet<String> = tokens(evidence).map(|t| t.to_lowercase()).collect();
    let hit = c.iter().filter(|t| e.contains(*t)).count();
    hit as f64 / c.len() as f64
}
