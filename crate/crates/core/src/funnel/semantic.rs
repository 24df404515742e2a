//! Embedding-space dedup and holdout decontamination.

use crate::backends::cosine;
use crate::par;

use super::minhash::{exact_jaccard, MinHashSignature, NearDupIndex, ShingleSet};

/// Greedy first-kept pass: vector `i` is dropped iff its cosine with any
/// earlier kept vector reaches `threshold`. Returns the absorbing kept index
/// per input (`None` when kept).
pub fn dedup_semantic_vectors(vectors: &[&[f64]], threshold: f64) -> Vec<Option<usize>> {
    let mut kept: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(vectors.len());
    for (i, v) in vectors.iter().enumerate() {
        let hit = if kept.len() > 4096 {
            let sims = par::map(&kept, |&k| cosine(v, vectors[k]) >= threshold);
            sims.iter().position(|b| *b).map(|p| kept[p])
        } else {
            kept.iter().copied().find(|&k| cosine(v, vectors[k]) >= threshold)
        };
        match hit {
            Some(k) => out.push(Some(k)),
            None => {
                kept.push(i);
                out.push(None);
            }
        }
    }
    out
}

/// Why a training item matched a holdout item.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Contamination {
    Lexical,
    Semantic,
}

impl Contamination {
    pub fn reason(self) -> &'static str {
        match self {
            Contamination::Lexical => "holdout-minhash",
            Contamination::Semantic => "holdout-cosine",
        }
    }
}

pub struct HoldoutSketch<'a> {
    pub shingles: &'a [(ShingleSet, MinHashSignature)],
    pub vectors: &'a [&'a [f64]],
}

/// Flags each training item matching any holdout item by exact Jaccard >=
/// `jaccard` (checked first) or cosine >= `cos`.
pub fn contamination(
    train_shingles: &[(ShingleSet, MinHashSignature)],
    train_vectors: &[&[f64]],
    holdout: HoldoutSketch<'_>,
    jaccard: f64,
    cos: f64,
) -> Vec<Option<Contamination>> {
    let mut index = NearDupIndex::new(jaccard, true);
    for (s, sig) in holdout.shingles {
        index.insert(s.clone(), sig);
    }
    let idx: Vec<usize> = (0..train_shingles.len()).collect();
    par::map(&idx, |&i| {
        let (s, sig) = &train_shingles[i];
        if index.find_match(s, sig).is_some() {
            return Some(Contamination::Lexical);
        }
        if holdout.vectors.iter().any(|h| cosine(train_vectors[i], h) >= cos) {
            return Some(Contamination::Semantic);
        }
        None
    })
}

/// Exhaustive check used by tests and diagnostics: pairs (i, j), i < j, with
/// exact Jaccard or cosine at or above the thresholds.
pub fn violating_pairs(shingles: &[ShingleSet], vectors: &[&[f64]], jaccard: f64, cos: f64) -> Vec<(usize, usize)> {
    let n = shingles.len();
    let rows = par::map_indexed(n, |i| {
        ((i + 1)..n)
            .filter(|&j| exact_jaccard(&shingles[i], &shingles[j]) >= jaccard || cosine(vectors[i], vectors[j]) >= cos)
            .map(|j| (i, j))
            .collect::<Vec<_>>()
    });
    rows.into_iter().flatten().collect()
}
