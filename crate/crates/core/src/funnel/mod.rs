//! The curation funnel: staged filters, near-duplicate removal, holdout
//! decontamination, silver-decomposition gating, budgeted selection and
//! long-evidence augmentation, with per-stage accounting.
//!
//! Every stage takes records in input order and returns the kept ones in the
//! same order, so parallel per-record work never changes what the sequential
//! greedy passes see.

mod config;
pub mod minhash;
pub mod rules;
pub mod select;
pub mod semantic;
pub mod silver;

use std::collections::{BTreeMap, HashSet};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::backends::{Embedder, Judge, Verifier};
use crate::corpus::{ingest_claims, ClaimRecord, EntityCounter, LabelMap};

pub use config::{
    build_embedder, build_judge, build_ner, build_verifier, BackendSource, BackendSpec, Backends, BackendsConfig,
    FunnelConfig,
};
pub use minhash::{estimate_jaccard, exact_jaccard, MinHashSignature, MinHasher, ShingleSet};
pub use rules::{difficulty_filter, rule_filter, Thresholds};
pub use select::{allocate_budgets, CellBudget, SelectError, SelectionBudget, Selector};
pub use silver::{silver_decompose, silver_filter, silver_stage};

pub const STAGES: [&str; 9] = [
    "ingest",
    "rule-filter",
    "difficulty",
    "minhash-dedup",
    "semantic-dedup",
    "decontaminate",
    "silver",
    "select",
    "augment",
];

#[derive(Debug, thiserror::Error)]
pub enum FunnelError {
    #[error("stage {stage}: {message}")]
    Stage { stage: &'static str, message: String },
    #[error("config: {0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
}

impl FunnelError {
    pub fn stage(stage: &'static str, message: impl Into<String>) -> Self {
        FunnelError::Stage {
            stage,
            message: message.into(),
        }
    }

    pub fn stage_name(&self) -> Option<&'static str> {
        match self {
            FunnelError::Stage { stage, .. } => Some(stage),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StageOutcome {
    pub kept: Vec<ClaimRecord>,
    pub rejected: Vec<Rejection>,
}

impl StageOutcome {
    /// Partitions `records` by per-record rejection reasons, keeping order.
    pub fn split(records: Vec<ClaimRecord>, verdicts: Vec<Option<&'static str>>) -> Self {
        assert_eq!(records.len(), verdicts.len());
        let mut out = StageOutcome::default();
        for (r, v) in records.into_iter().zip(verdicts) {
            match v {
                None => out.kept.push(r),
                Some(reason) => out.rejected.push(Rejection {
                    id: r.id,
                    reason: reason.to_string(),
                }),
            }
        }
        out
    }

    pub fn histogram(&self) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for r in &self.rejected {
            *h.entry(r.reason.clone()).or_default() += 1;
        }
        h
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageReport {
    pub name: String,
    pub input: usize,
    pub output: usize,
    #[serde(default)]
    pub rejected: BTreeMap<String, usize>,
    #[serde(default)]
    pub added: usize,
}

impl StageReport {
    pub fn rejected_total(&self) -> usize {
        self.rejected.values().sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FunnelReport {
    pub seed: u64,
    pub selector: Selector,
    pub stages: Vec<StageReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget: Option<SelectionBudget>,
}

/// Per-stage seed: the first eight bytes of SHA-256(seed ∥ name).
pub fn derive_seed(seed: u64, name: &str) -> u64 {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(name.as_bytes());
    let d = h.finalize();
    u64::from_le_bytes(d[..8].try_into().expect("8 bytes"))
}

/// Removes records whose claim shingles reach `t.minhash_jaccard` exact
/// Jaccard with an earlier kept claim.
pub fn dedup_minhash(records: Vec<ClaimRecord>, t: &Thresholds, hasher: &MinHasher) -> StageOutcome {
    let claims: Vec<&str> = records.iter().map(|r| r.claim.as_str()).collect();
    let hits = minhash::dedup_minhash_texts(&claims, t.minhash_jaccard, hasher, t.exhaustive_candidates);
    let verdicts = hits.iter().map(|h| h.map(|_| "near-duplicate-minhash")).collect();
    StageOutcome::split(records, verdicts)
}

fn embed_claims(
    records: &[ClaimRecord],
    embedder: &Embedder,
    stage: &'static str,
) -> Result<Vec<std::sync::Arc<Vec<f64>>>, FunnelError> {
    let claims: Vec<&str> = records.iter().map(|r| r.claim.as_str()).collect();
    embedder
        .embed(&claims)
        .map_err(|e| FunnelError::stage(stage, e.to_string()))
}

/// Removes records whose claim embedding reaches `t.semantic_cosine` with
/// an earlier kept claim.
pub fn dedup_semantic(
    records: Vec<ClaimRecord>,
    t: &Thresholds,
    embedder: &Embedder,
) -> Result<StageOutcome, FunnelError> {
    let vecs = embed_claims(&records, embedder, "semantic-dedup")?;
    let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
    let hits = semantic::dedup_semantic_vectors(&refs, t.semantic_cosine);
    let verdicts = hits.iter().map(|h| h.map(|_| "near-duplicate-cosine")).collect();
    Ok(StageOutcome::split(records, verdicts))
}

/// Removes training records matching any holdout claim lexically or
/// semantically. An empty holdout set passes everything through.
pub fn decontaminate(
    records: Vec<ClaimRecord>,
    holdout_claims: &[String],
    t: &Thresholds,
    embedder: &Embedder,
    hasher: &MinHasher,
) -> Result<StageOutcome, FunnelError> {
    if holdout_claims.is_empty() || records.is_empty() {
        return Ok(StageOutcome {
            kept: records,
            rejected: Vec::new(),
        });
    }
    let claims: Vec<&str> = records.iter().map(|r| r.claim.as_str()).collect();
    let train_sk = minhash::sketch_all(&claims, hasher);
    let hold_sk = minhash::sketch_all(holdout_claims, hasher);
    let train_v = embed_claims(&records, embedder, "decontaminate")?;
    let hold_v = embedder
        .embed(holdout_claims)
        .map_err(|e| FunnelError::stage("decontaminate", format!("holdout: {e}")))?;
    let train_refs: Vec<&[f64]> = train_v.iter().map(|v| v.as_slice()).collect();
    let hold_refs: Vec<&[f64]> = hold_v.iter().map(|v| v.as_slice()).collect();
    let flags = semantic::contamination(
        &train_sk,
        &train_refs,
        semantic::HoldoutSketch {
            shingles: &hold_sk,
            vectors: &hold_refs,
        },
        t.decontam_jaccard,
        t.decontam_cosine,
    );
    let verdicts = flags.into_iter().map(|f| f.map(|c| c.reason())).collect();
    Ok(StageOutcome::split(records, verdicts))
}

/// Reads every input file in config order. Ids seen in an earlier file win.
pub fn ingest(inputs: &[PathBuf], labels: &LabelMap) -> Result<StageOutcome, FunnelError> {
    let mut seen = HashSet::new();
    let mut out = StageOutcome::default();
    for path in inputs {
        let records = ingest_claims(path, labels).map_err(|e| FunnelError::stage("ingest", e.to_string()))?;
        for r in records {
            if seen.insert(r.id.clone()) {
                out.kept.push(r);
            } else {
                out.rejected.push(Rejection {
                    id: r.id,
                    reason: "duplicate-id".into(),
                });
            }
        }
    }
    Ok(out)
}

#[derive(Deserialize)]
struct HoldoutRow {
    claim: String,
}

/// Holdout files only need a `claim` field per line.
pub fn read_holdout_claims(paths: &[PathBuf]) -> Result<Vec<String>, FunnelError> {
    let mut out = Vec::new();
    for p in paths {
        let rows: Vec<HoldoutRow> =
            crate::io::read_jsonl(p).map_err(|e| FunnelError::stage("decontaminate", e.to_string()))?;
        out.extend(rows.into_iter().map(|r| r.claim));
    }
    Ok(out)
}

/// Borrowed evaluator handles for one run.
#[derive(Clone, Copy)]
pub struct StageBackends<'a> {
    pub judge: &'a Judge,
    pub embedder: &'a Embedder,
    pub verifier: &'a dyn Verifier,
    pub ner: &'a dyn EntityCounter,
}

impl<'a> From<&'a Backends> for StageBackends<'a> {
    fn from(b: &'a Backends) -> Self {
        Self {
            judge: &b.judge,
            embedder: &b.embedder,
            verifier: &*b.verifier,
            ner: &*b.ner,
        }
    }
}

pub struct FunnelOutput {
    pub records: Vec<ClaimRecord>,
    pub report: FunnelReport,
}

struct Chain {
    stages: Vec<StageReport>,
}

impl Chain {
    fn push(&mut self, name: &str, input: usize, outcome: &StageOutcome) {
        self.stages.push(StageReport {
            name: name.to_string(),
            input,
            output: outcome.kept.len(),
            rejected: outcome.histogram(),
            added: 0,
        });
    }
}

/// Runs every stage on already-ingested records.
pub fn run_stages(
    ingested: StageOutcome,
    input_count: usize,
    holdout_claims: &[String],
    cfg: &FunnelConfig,
    b: StageBackends<'_>,
) -> Result<FunnelOutput, FunnelError> {
    let t = &cfg.thresholds;
    let mut chain = Chain { stages: Vec::new() };
    chain.push("ingest", input_count, &ingested);

    let mut current = ingested.kept;
    fn step(chain: &mut Chain, name: &str, outcome: StageOutcome, input: usize) -> Vec<ClaimRecord> {
        chain.push(name, input, &outcome);
        outcome.kept
    }

    let n = current.len();
    current = step(&mut chain, "rule-filter", rule_filter(current, t, b.ner)?, n);
    let n = current.len();
    current = step(&mut chain, "difficulty", difficulty_filter(current, t, b.verifier)?, n);
    let n = current.len();
    let hasher = MinHasher::new(derive_seed(cfg.seed, "minhash"));
    current = step(&mut chain, "minhash-dedup", dedup_minhash(current, t, &hasher), n);
    let n = current.len();
    current = step(&mut chain, "semantic-dedup", dedup_semantic(current, t, b.embedder)?, n);
    let n = current.len();
    current = step(
        &mut chain,
        "decontaminate",
        decontaminate(current, holdout_claims, t, b.embedder, &hasher)?,
        n,
    );
    let n = current.len();
    current = step(
        &mut chain,
        "silver",
        silver_stage(current, b.judge, t.min_silver_questions)?,
        n,
    );

    let pool = current;
    let budget = allocate_budgets(&pool, cfg.budget).map_err(|e| FunnelError::stage("select", e.to_string()))?;
    let vecs = embed_claims(&pool, b.embedder, "select")?;
    let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
    let seed = cfg.seed;
    let chosen = select::select_pool(&pool, &refs, &budget, cfg.selector, |label, source| {
        derive_seed(seed, &format!("select/{label}/{source}"))
    })
    .map_err(|e| FunnelError::stage("select", e.to_string()))?;
    chain.stages.push(StageReport {
        name: "select".into(),
        input: pool.len(),
        output: chosen.len(),
        rejected: [("not-selected".to_string(), pool.len() - chosen.len())]
            .into_iter()
            .filter(|(_, c)| *c > 0)
            .collect(),
        added: 0,
    });

    let extra = select::long_evidence_augment(&pool, &chosen, t.long_evidence_tokens);
    chain.stages.push(StageReport {
        name: "augment".into(),
        input: chosen.len(),
        output: chosen.len() + extra.len(),
        rejected: BTreeMap::new(),
        added: extra.len(),
    });

    let mut keep: Vec<usize> = chosen.into_iter().chain(extra).collect();
    keep.sort_unstable();
    let mut slots: Vec<Option<ClaimRecord>> = pool.into_iter().map(Some).collect();
    let records = keep
        .into_iter()
        .map(|i| slots[i].take().expect("unique index"))
        .collect();
    Ok(FunnelOutput {
        records,
        report: FunnelReport {
            seed: cfg.seed,
            selector: cfg.selector,
            stages: chain.stages,
            budget: Some(budget),
        },
    })
}

/// Ingests the configured inputs and runs the whole funnel.
pub fn run_funnel(cfg: &FunnelConfig, b: StageBackends<'_>) -> Result<FunnelOutput, FunnelError> {
    let ingested = ingest(&cfg.inputs, &cfg.label_map())?;
    let input_count = ingested.kept.len() + ingested.rejected.len();
    let holdouts = read_holdout_claims(&cfg.holdouts)?;
    run_stages(ingested, input_count, &holdouts, cfg, b)
}

pub const CURATED_FILE: &str = "curated.jsonl";
pub const REPORT_FILE: &str = "report.json";

/// Writes the curated JSONL and the report JSON atomically into `dir`.
pub fn write_outputs(dir: &Path, out: &FunnelOutput) -> Result<(PathBuf, PathBuf), FunnelError> {
    std::fs::create_dir_all(dir).map_err(|e| FunnelError::Io(format!("{}: {e}", dir.display())))?;
    let curated = dir.join(CURATED_FILE);
    let report = dir.join(REPORT_FILE);
    let mut json = serde_json::to_string_pretty(&out.report).map_err(|e| FunnelError::Io(e.to_string()))?;
    json.push('\n');
    crate::io::write_jsonl_atomic(&curated, &out.records).map_err(|e| FunnelError::Io(e.to_string()))?;
    crate::io::write_atomic(&report, json.as_bytes()).map_err(|e| FunnelError::Io(e.to_string()))?;
    Ok((curated, report))
}

#[cfg(test)]
mod tests;
