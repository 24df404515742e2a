//! The seven-signal reward ensemble over one parsed trace, its label-free
//! variants, pseudo-labels and group-normalized advantages.
//!
//! `total` is the unit-weight sum of the components, in field order.

mod group;
mod judged;

use serde::{Deserialize, Serialize};

use crate::backends::{cosine, BackendError, Embedder, Judge};
use crate::corpus::{ClaimRecord, Label};
use crate::trace::{parse_trace, ParseReport};

pub use group::{
    agreement_fraction, group_advantages, partition_supervision, pseudo_label, supervision_draw, Partition,
    ADVANTAGE_EPS,
};
pub use judged::{
    coverage_reward, coverage_verdict, format_answers, joint_from_factors, joint_quality_reward, necessity_cell,
    necessity_from_verdicts, necessity_reward, necessity_reward_relative, relative_from_verdicts, CoverageScore,
    JointFactors, JointScore, NecessityScore, NecessityVerdictPair,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RewardError {
    #[error("record {0} has no silver_question_count")]
    MissingSilverCount(String),
    #[error("record {0} has no gold label for labeled scoring")]
    MissingGold(String),
    #[error("{component}: {source}")]
    Backend {
        component: &'static str,
        #[source]
        source: BackendError,
    },
}

fn attribute(component: &'static str) -> impl Fn(BackendError) -> RewardError {
    move |source| RewardError::Backend { component, source }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SupervisionMode {
    Labeled(Label),
    /// Pseudo-label from the rollout group, if the vote was not tied.
    Unlabeled(Option<Label>),
}

impl SupervisionMode {
    pub fn name(&self) -> &'static str {
        match self {
            SupervisionMode::Labeled(_) => "labeled",
            SupervisionMode::Unlabeled(_) => "unlabeled",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardBreakdown {
    pub fmt: f64,
    pub ver: f64,
    pub qc: f64,
    pub div: f64,
    pub cov: f64,
    pub nec: f64,
    pub nec_per_question: Vec<f64>,
    pub joint: f64,
    pub joint_per_question: Vec<f64>,
    pub total: f64,
    pub flags: Vec<String>,
}

impl RewardBreakdown {
    pub fn components(&self) -> [f64; 7] {
        [self.fmt, self.ver, self.qc, self.div, self.cov, self.nec, self.joint]
    }

    pub fn sum_components(&self) -> f64 {
        self.fmt + self.ver + self.qc + self.div + self.cov + self.nec + self.joint
    }

    /// Names of components outside their ranges, plus "total" if it is not
    /// the exact component sum.
    pub fn violations(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        let in01 = |x: f64| (0.0..=1.0).contains(&x);
        let bit = |x: f64| x == 0.0 || x == 1.0;
        if !in01(self.fmt) {
            out.push("fmt");
        }
        if !bit(self.ver) {
            out.push("ver");
        }
        if !in01(self.qc) {
            out.push("qc");
        }
        if !(-1.0..=0.0).contains(&self.div) {
            out.push("div");
        }
        if !bit(self.cov) {
            out.push("cov");
        }
        if ![-1.0, 0.0, 0.5, 1.0].contains(&self.nec) {
            out.push("nec");
        }
        if !in01(self.joint) {
            out.push("joint");
        }
        if self.total.to_bits() != self.sum_components().to_bits() {
            out.push("total");
        }
        out
    }
}

/// One line of the rewards JSONL output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RewardRecord {
    pub id: String,
    #[serde(flatten)]
    pub breakdown: RewardBreakdown,
    pub mode: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub pseudo_label: Option<Label>,
}

impl RewardRecord {
    pub fn new(id: &str, mode: SupervisionMode, breakdown: RewardBreakdown) -> Self {
        Self {
            id: id.to_string(),
            breakdown,
            mode: mode.name().to_string(),
            pseudo_label: match mode {
                SupervisionMode::Unlabeled(p) => p,
                SupervisionMode::Labeled(_) => None,
            },
        }
    }
}

pub fn format_reward(report: &ParseReport) -> f64 {
    report.fraction()
}

/// 1 iff a verdict is present and equals the gold label.
pub fn verification_reward(verdict: Option<Label>, gold: Label) -> f64 {
    if verdict == Some(gold) {
        1.0
    } else {
        0.0
    }
}

/// Triangular kernel in r = n / n_star, peaking at r = 1 and zero for r >= 2.
pub fn question_count_reward(n: usize, n_star: u32) -> f64 {
    let r = n as f64 / f64::from(n_star);
    (1.0 - (r - 1.0).abs()).max(0.0)
}

/// `-(1/n) * sum_{i>=2} max_{j<i} cos(q_i, q_j)` over unit embeddings, with
/// each running maximum floored at 0 so the reward stays in [-1, 0].
pub fn diversity_from_embeddings(vectors: &[&[f64]]) -> f64 {
    let n = vectors.len();
    if n < 2 {
        return 0.0;
    }
    let penalty: f64 = (1..n)
        .map(|i| (0..i).map(|j| cosine(vectors[i], vectors[j])).fold(0.0, f64::max))
        .sum();
    -penalty / n as f64
}

pub fn diversity_reward(questions: &[&str], embedder: &Embedder) -> Result<f64, BackendError> {
    if questions.len() < 2 {
        return Ok(0.0);
    }
    let vecs = embedder.embed(questions)?;
    let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
    Ok(diversity_from_embeddings(&refs))
}

/// External evaluators used while scoring.
#[derive(Clone, Copy)]
pub struct RewardBackends<'a> {
    pub judge: &'a Judge,
    pub embedder: &'a Embedder,
}

/// Scores a raw trace against its claim record.
///
/// Labeled: verification and coverage against the gold label, matrix
/// necessity. Unlabeled: verification contributes 0, coverage is agreement
/// of this rollout's verdict with the group pseudo-label (0 without one), and
/// necessity is the relative variant. Components are computed over the
/// best-effort cycles even when the trace as a whole does not parse.
pub fn total_reward(
    record: &ClaimRecord,
    trace_text: &str,
    mode: SupervisionMode,
    backends: RewardBackends<'_>,
) -> Result<RewardBreakdown, RewardError> {
    let n_star = record
        .silver_question_count
        .ok_or_else(|| RewardError::MissingSilverCount(record.id.clone()))?;
    let report = parse_trace(trace_text);
    let mut flags = Vec::new();
    if report.trace.is_none() {
        flags.push("trace:unparsed".to_string());
    }
    let verdict = report.verdict();
    if verdict.is_none() {
        flags.push("ver:no-verdict".to_string());
    }
    let cycles = &report.cycles;
    let questions: Vec<&str> = cycles.iter().map(|c| c.question.as_str()).collect();
    let answers: Vec<&str> = cycles.iter().map(|c| c.answer.as_str()).collect();
    let document = record.document();

    let fmt = format_reward(&report);
    let qc = question_count_reward(cycles.len(), n_star);
    let div = diversity_reward(&questions, backends.embedder).map_err(attribute("div"))?;

    let (ver, cov, nec) = if answers.is_empty() {
        flags.push("cov:no-answers".to_string());
        flags.push("nec:no-questions".to_string());
        let ver = match mode {
            SupervisionMode::Labeled(gold) => verification_reward(verdict, gold),
            SupervisionMode::Unlabeled(_) => 0.0,
        };
        let cov = match mode {
            SupervisionMode::Unlabeled(Some(p)) => verification_reward(verdict, p),
            _ => 0.0,
        };
        (
            ver,
            cov,
            NecessityScore {
                per_question: vec![],
                trace: 0.0,
                pairs: vec![],
            },
        )
    } else {
        match mode {
            SupervisionMode::Labeled(gold) => {
                let c = coverage_reward(&record.claim, &answers, gold, backends.judge).map_err(attribute("cov"))?;
                if c.unparsable() {
                    flags.push("cov:unparsable".to_string());
                }
                let nec = necessity_reward(&record.claim, &answers, gold, backends.judge).map_err(attribute("nec"))?;
                (verification_reward(verdict, gold), c.value, nec)
            }
            SupervisionMode::Unlabeled(pseudo) => {
                let cov = match pseudo {
                    Some(p) => verification_reward(verdict, p),
                    None => {
                        flags.push("cov:no-pseudo-label".to_string());
                        0.0
                    }
                };
                let nec =
                    necessity_reward_relative(&record.claim, &answers, backends.judge).map_err(attribute("nec"))?;
                (0.0, cov, nec)
            }
        }
    };
    for (i, p) in nec.pairs.iter().enumerate() {
        if p.loo.is_none() {
            flags.push(format!("nec:q{}:unparsable", i + 1));
        }
    }
    if nec.pairs.first().is_some_and(|p| p.full.is_none()) {
        flags.push("nec:full-unparsable".to_string());
    }

    let joint = joint_quality_reward(&document, &record.claim, cycles, backends.judge).map_err(attribute("joint"))?;
    for (i, f) in joint.factors.iter().enumerate() {
        for (name, v) in [("ans", f.ans), ("atom", f.atom)] {
            if v.is_none() {
                flags.push(format!("joint:q{}:{name}-unparsable", i + 1));
            }
        }
        if !f.abstention && f.corr.is_none() {
            flags.push(format!("joint:q{}:corr-unparsable", i + 1));
        }
    }

    let mut out = RewardBreakdown {
        fmt,
        ver,
        qc,
        div,
        cov,
        nec: nec.trace,
        nec_per_question: nec.per_question,
        joint: joint.value,
        joint_per_question: joint.per_question,
        total: 0.0,
        flags,
    };
    out.total = out.sum_components();
    Ok(out)
}

/// Scores of one rollout group.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupScore {
    pub id: String,
    pub mode: String,
    pub pseudo_label: Option<Label>,
    pub agreement: f64,
    pub verdicts: Vec<Option<Label>>,
    pub breakdowns: Vec<RewardBreakdown>,
    pub advantages: Vec<f64>,
}

/// Scores the G rollouts of one claim. With `labeled` the gold label drives
/// every rollout; otherwise the group's pseudo-label does.
pub fn score_group<S: AsRef<str> + Sync>(
    record: &ClaimRecord,
    traces: &[S],
    labeled: bool,
    backends: RewardBackends<'_>,
) -> Result<GroupScore, RewardError> {
    let verdicts: Vec<Option<Label>> = traces.iter().map(|t| parse_trace(t.as_ref()).verdict()).collect();
    let pseudo = pseudo_label(&verdicts);
    let mode = match (labeled, record.label) {
        (true, Some(gold)) => SupervisionMode::Labeled(gold),
        (true, None) => return Err(RewardError::MissingGold(record.id.clone())),
        (false, _) => SupervisionMode::Unlabeled(pseudo),
    };
    let breakdowns = crate::par::try_map(traces, |t| total_reward(record, t.as_ref(), mode, backends))?;
    let totals: Vec<f64> = breakdowns.iter().map(|b| b.total).collect();
    Ok(GroupScore {
        id: record.id.clone(),
        mode: mode.name().to_string(),
        pseudo_label: pseudo,
        agreement: agreement_fraction(&verdicts),
        verdicts,
        advantages: group_advantages(&totals),
        breakdowns,
    })
}
