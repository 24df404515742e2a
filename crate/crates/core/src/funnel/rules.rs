use serde::{Deserialize, Serialize};

use crate::backends::{difficulty_score, DifficultyError, Verifier};
use crate::corpus::{count_tokens, entity_count, lexical_overlap, ClaimRecord, EntityCounter};
use crate::par;

use super::{FunnelError, StageOutcome};

/// Every knob of the curation funnel.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Thresholds {
    pub min_passages: usize,
    pub min_evidence_tokens: usize,
    pub max_evidence_tokens: usize,
    /// Records whose claim/evidence overlap exceeds this are dropped.
    pub max_overlap: f64,
    pub min_entities: usize,
    pub difficulty_low: f64,
    pub difficulty_high: f64,
    pub minhash_jaccard: f64,
    pub semantic_cosine: f64,
    pub decontam_jaccard: f64,
    pub decontam_cosine: f64,
    pub min_silver_questions: u32,
    pub long_evidence_tokens: usize,
    /// Adds a prefix-filter candidate index next to LSH so no pair at or
    /// above the Jaccard threshold can escape verification.
    pub exhaustive_candidates: bool,
}

impl Default for Thresholds {
    fn default() -> Self {
        Self {
            min_passages: 3,
            min_evidence_tokens: 200,
            max_evidence_tokens: 10_000,
            max_overlap: 0.9,
            min_entities: 2,
            difficulty_low: 0.3,
            difficulty_high: 0.8,
            minhash_jaccard: 0.7,
            semantic_cosine: 0.70,
            decontam_jaccard: 0.7,
            decontam_cosine: 0.90,
            min_silver_questions: 2,
            long_evidence_tokens: 3000,
            exhaustive_candidates: true,
        }
    }
}

/// First failing rule for a record, entity count last since it may call out.
pub fn rule_check(
    r: &ClaimRecord,
    t: &Thresholds,
    ner: &dyn EntityCounter,
) -> Result<Option<&'static str>, FunnelError> {
    if r.evidence.len() < t.min_passages {
        return Ok(Some("too-few-passages"));
    }
    let doc = r.document();
    let n = count_tokens(&doc).0;
    if n < t.min_evidence_tokens {
        return Ok(Some("too-short"));
    }
    if n > t.max_evidence_tokens {
        return Ok(Some("too-long"));
    }
    if lexical_overlap(&r.claim, &doc) > t.max_overlap {
        return Ok(Some("high-overlap"));
    }
    let entities =
        entity_count(&r.claim, ner).map_err(|e| FunnelError::stage("rule-filter", format!("{}: {e}", r.id)))?;
    if entities < t.min_entities {
        return Ok(Some("too-few-entities"));
    }
    Ok(None)
}

pub fn rule_filter(
    records: Vec<ClaimRecord>,
    t: &Thresholds,
    ner: &dyn EntityCounter,
) -> Result<StageOutcome, FunnelError> {
    let verdicts = par::try_map(&records, |r| rule_check(r, t, ner))?;
    Ok(StageOutcome::split(records, verdicts))
}

pub fn difficulty_filter(
    records: Vec<ClaimRecord>,
    t: &Thresholds,
    verifier: &dyn Verifier,
) -> Result<StageOutcome, FunnelError> {
    let verdicts = par::try_map(&records, |r| {
        let p = difficulty_score(r, verifier).map_err(|e| match e {
            DifficultyError::Unlabeled(id) => {
                FunnelError::stage("difficulty", format!("record {id} has no gold label"))
            }
            DifficultyError::Backend(b) => FunnelError::stage("difficulty", format!("{}: {b}", r.id)),
        })?;
        Ok::<_, FunnelError>(if p < t.difficulty_low {
            Some("below-difficulty-band")
        } else if p > t.difficulty_high {
            Some("above-difficulty-band")
        } else {
            None
        })
    })?;
    Ok(StageOutcome::split(records, verdicts))
}
