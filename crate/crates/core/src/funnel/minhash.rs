//! Word-shingle sets, MinHash signatures, LSH banding and the exact-verified
//! near-duplicate pass.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64;

use crate::corpus::tokens;
use crate::par;

pub const NUM_PERM: usize = 128;
pub const BANDS: usize = 16;
pub const ROWS: usize = 8;
const MERSENNE_61: u64 = (1 << 61) - 1;

/// Sorted, deduplicated hashes of the 3-token windows of a lowercased text.
/// Texts with one or two tokens get a single shingle of the whole text; an
/// empty text has no shingles.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ShingleSet(Vec<u64>);

impl ShingleSet {
    pub fn from_text(text: &str) -> Self {
        let toks: Vec<String> = tokens(text).map(|t| t.to_lowercase()).collect();
        let mut hashes: Vec<u64> = if toks.len() < 3 {
            if toks.is_empty() {
                Vec::new()
            } else {
                vec![xxh3_64(toks.join(" ").as_bytes())]
            }
        } else {
            toks.windows(3).map(|w| xxh3_64(w.join(" ").as_bytes())).collect()
        };
        hashes.sort_unstable();
        hashes.dedup();
        ShingleSet(hashes)
    }

    pub fn from_hashes(mut hashes: Vec<u64>) -> Self {
        hashes.sort_unstable();
        hashes.dedup();
        ShingleSet(hashes)
    }

    pub fn hashes(&self) -> &[u64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn intersection_len(&self, other: &ShingleSet) -> usize {
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }
}

/// |A ∩ B| / |A ∪ B|; two empty sets score 0.
pub fn exact_jaccard(a: &ShingleSet, b: &ShingleSet) -> f64 {
    let inter = a.intersection_len(b);
    let union = a.len() + b.len() - inter;
    if union == 0 {
        0.0
    } else {
        inter as f64 / union as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinHashSignature(pub Vec<u64>);

/// Fraction of agreeing positions. Signatures must have equal length.
pub fn estimate_jaccard(a: &MinHashSignature, b: &MinHashSignature) -> f64 {
    assert_eq!(a.0.len(), b.0.len(), "signature lengths differ");
    if a.0.is_empty() {
        return 0.0;
    }
    let agree = a.0.iter().zip(&b.0).filter(|(x, y)| x == y).count();
    agree as f64 / a.0.len() as f64
}

fn mod_mersenne(x: u128) -> u64 {
    let lo = (x as u64) & MERSENNE_61;
    let hi = (x >> 61) as u64;
    let mut r = lo + (hi & MERSENNE_61) + ((x >> 122) as u64);
    while r >= MERSENNE_61 {
        r -= MERSENNE_61;
    }
    r
}

/// SplitMix64 finalizer; decorrelates structured inputs such as small
/// consecutive integers before the linear permutations.
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// 128 seeded universal hashes `(a x + b) mod (2^61 - 1)`.
#[derive(Debug, Clone)]
pub struct MinHasher {
    coeffs: Vec<(u64, u64)>,
}

impl MinHasher {
    pub fn new(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let coeffs = (0..NUM_PERM)
            .map(|_| (rng.gen_range(1..MERSENNE_61), rng.gen_range(0..MERSENNE_61)))
            .collect();
        Self { coeffs }
    }

    pub fn signature(&self, set: &ShingleSet) -> MinHashSignature {
        let mut sig = vec![u64::MAX; self.coeffs.len()];
        for &h in set.hashes() {
            let x = u128::from(mix64(h) % MERSENNE_61);
            for (slot, &(a, b)) in sig.iter_mut().zip(&self.coeffs) {
                let v = mod_mersenne(u128::from(a) * x + u128::from(b));
                if v < *slot {
                    *slot = v;
                }
            }
        }
        MinHashSignature(sig)
    }
}

impl Default for MinHasher {
    fn default() -> Self {
        Self::new(0x005e_ed0f_4d11)
    }
}

/// Hash of each band of a signature, tagged with the band index.
pub fn band_keys(sig: &MinHashSignature) -> Vec<u64> {
    sig.0
        .chunks(ROWS)
        .enumerate()
        .map(|(band, rows)| {
            let mut bytes = Vec::with_capacity(8 * (ROWS + 1));
            bytes.extend_from_slice(&(band as u64).to_le_bytes());
            for r in rows {
                bytes.extend_from_slice(&r.to_le_bytes());
            }
            xxh3_64(&bytes)
        })
        .collect()
}

/// Number of leading shingles (in global hash order) that any set sharing
/// Jaccard >= `t` with this one must intersect.
fn prefix_len(size: usize, t: f64) -> usize {
    if size == 0 {
        return 0;
    }
    let overlap = ((t * size as f64) - 1e-9).ceil().max(1.0) as usize;
    (size - overlap.min(size) + 1).min(size)
}

/// Incremental near-duplicate index. Candidates come from LSH band
/// collisions plus, when `exhaustive` is on, a prefix-filter inverted index
/// that cannot miss a pair at or above the threshold. Every candidate is
/// verified with exact Jaccard.
pub struct NearDupIndex {
    threshold: f64,
    exhaustive: bool,
    sets: Vec<ShingleSet>,
    bands: HashMap<u64, Vec<usize>>,
    prefixes: HashMap<u64, Vec<usize>>,
}

impl NearDupIndex {
    pub fn new(threshold: f64, exhaustive: bool) -> Self {
        Self {
            threshold,
            exhaustive,
            sets: Vec::new(),
            bands: HashMap::new(),
            prefixes: HashMap::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sets.is_empty()
    }

    pub fn insert(&mut self, set: ShingleSet, sig: &MinHashSignature) -> usize {
        let id = self.sets.len();
        for key in band_keys(sig) {
            self.bands.entry(key).or_default().push(id);
        }
        if self.exhaustive {
            for &h in &set.hashes()[..prefix_len(set.len(), self.threshold)] {
                self.prefixes.entry(h).or_default().push(id);
            }
        }
        self.sets.push(set);
        id
    }

    /// Smallest indexed id whose exact Jaccard with `set` reaches the
    /// threshold.
    pub fn find_match(&self, set: &ShingleSet, sig: &MinHashSignature) -> Option<usize> {
        let mut cands: Vec<usize> = band_keys(sig)
            .iter()
            .filter_map(|k| self.bands.get(k))
            .flatten()
            .copied()
            .collect();
        if self.exhaustive {
            for h in &set.hashes()[..prefix_len(set.len(), self.threshold)] {
                if let Some(ids) = self.prefixes.get(h) {
                    cands.extend_from_slice(ids);
                }
            }
        }
        cands.sort_unstable();
        cands.dedup();
        cands
            .into_iter()
            .find(|&c| exact_jaccard(set, &self.sets[c]) >= self.threshold)
    }
}

/// Shingles and signatures of many texts, computed in parallel.
pub fn sketch_all<S: AsRef<str> + Sync>(texts: &[S], hasher: &MinHasher) -> Vec<(ShingleSet, MinHashSignature)> {
    par::map(texts, |t| {
        let s = ShingleSet::from_text(t.as_ref());
        let sig = hasher.signature(&s);
        (s, sig)
    })
}

/// Greedy first-kept pass: text `i` is dropped iff its exact shingle Jaccard
/// with an earlier kept text reaches `threshold`. Returns, per text, the
/// index of the kept text that absorbed it (`None` when kept).
pub fn dedup_minhash_texts<S: AsRef<str> + Sync>(
    texts: &[S],
    threshold: f64,
    hasher: &MinHasher,
    exhaustive: bool,
) -> Vec<Option<usize>> {
    let sketches = sketch_all(texts, hasher);
    let mut index = NearDupIndex::new(threshold, exhaustive);
    let mut kept_ids: Vec<usize> = Vec::new();
    let mut out = Vec::with_capacity(texts.len());
    for (i, (set, sig)) in sketches.into_iter().enumerate() {
        match index.find_match(&set, &sig) {
            Some(m) => out.push(Some(kept_ids[m])),
            None => {
                index.insert(set, &sig);
                kept_ids.push(i);
                out.push(None);
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn set(xs: &[u64]) -> ShingleSet {
        ShingleSet::from_hashes(xs.to_vec())
    }

    #[test]
    fn shingle_rules() {
        assert!(ShingleSet::from_text("").is_empty());
        assert_eq!(ShingleSet::from_text("one two").len(), 1);
        assert_eq!(ShingleSet::from_text("a b c d").len(), 2);
        assert_eq!(ShingleSet::from_text("A b, C"), ShingleSet::from_text("a B c"));
    }

    #[test]
    fn jaccard_examples() {
        let a = set(&[1, 2, 3]);
        let b = set(&[2, 3, 4]);
        assert_eq!(exact_jaccard(&a, &a), 1.0);
        assert_eq!(exact_jaccard(&a, &set(&[7, 8])), 0.0);
        assert_eq!(exact_jaccard(&a, &b), 0.5);
        assert_eq!(exact_jaccard(&set(&[]), &set(&[])), 0.0);
        let h = MinHasher::default();
        assert_eq!(estimate_jaccard(&h.signature(&a), &h.signature(&a)), 1.0);
        assert_eq!(h.signature(&a).0.len(), NUM_PERM);
        let est = estimate_jaccard(&h.signature(&a), &h.signature(&b));
        assert!((est - 0.5).abs() <= 0.1, "{est}");
    }

    #[test]
    fn mersenne_reduction() {
        for x in [
            0u128,
            1,
            MERSENNE_61 as u128,
            (MERSENNE_61 as u128) * 3 + 5,
            u128::from(u64::MAX) * u128::from(u64::MAX >> 3),
        ] {
            assert_eq!(u128::from(mod_mersenne(x)), x % MERSENNE_61 as u128);
        }
    }

    #[test]
    fn dedup_examples() {
        let texts = [
            "the quick brown fox jumps over the lazy dog",
            "the quick brown fox jumps over the lazy dog",
            "an entirely different sentence about cheese and wine",
        ];
        let h = MinHasher::default();
        assert_eq!(dedup_minhash_texts(&texts, 0.7, &h, true), vec![None, Some(0), None]);
    }

    #[test]
    fn candidate_rejected_by_exact_check() {
        // J = 0.5: even when forced into the same band, the exact check keeps both.
        let a = set(&[1, 2, 3]);
        let b = set(&[2, 3, 4]);
        let sig = MinHashSignature(vec![9; NUM_PERM]);
        let mut idx = NearDupIndex::new(0.7, true);
        idx.insert(a, &sig);
        assert_eq!(idx.find_match(&b, &sig), None);
    }

    #[test]
    fn prefix_lengths() {
        assert_eq!(prefix_len(10, 0.7), 4);
        assert_eq!(prefix_len(1, 0.7), 1);
        assert_eq!(prefix_len(3, 0.7), 1);
        assert_eq!(prefix_len(0, 0.7), 0);
    }

    proptest! {
        #[test]
        fn exhaustive_index_finds_every_pair(base in prop::collection::btree_set(0u64..60, 1..25), extra in prop::collection::btree_set(0u64..60, 0..25)) {
            let a = ShingleSet::from_hashes(base.iter().copied().collect());
            let b = ShingleSet::from_hashes(base.iter().chain(extra.iter()).copied().collect());
            let h = MinHasher::default();
            let mut idx = NearDupIndex::new(0.7, true);
            idx.insert(a.clone(), &h.signature(&a));
            let found = idx.find_match(&b, &h.signature(&b)).is_some();
            prop_assert_eq!(found, exact_jaccard(&a, &b) >= 0.7);
        }

        #[test]
        fn dedup_idempotent(words in prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e"]), 3..40)) {
            let texts: Vec<String> = words.chunks(4).map(|c| c.join(" ")).collect();
            let h = MinHasher::default();
            let first = dedup_minhash_texts(&texts, 0.7, &h, true);
            let kept: Vec<&String> = texts.iter().zip(&first).filter(|(_, m)| m.is_none()).map(|(t, _)| t).collect();
            let again = dedup_minhash_texts(&kept, 0.7, &h, true);
            prop_assert!(again.iter().all(|m| m.is_none()));
        }
    }
}
