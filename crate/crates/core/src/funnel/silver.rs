use crate::backends::{parse_question_list, render_prompt, Judge, TemplateId};
use crate::corpus::ClaimRecord;
use crate::par;

use super::{FunnelError, StageOutcome};

/// Result of asking the strong model for a reference decomposition.
#[derive(Debug, Clone, PartialEq)]
pub enum SilverResult {
    Questions(Vec<String>),
    Unparsable,
}

pub fn silver_prompt(record: &ClaimRecord) -> String {
    render_prompt(
        TemplateId::SilverDecompose,
        &[("evidence_doc", &record.document()), ("claim", &record.claim)],
    )
    .expect("silver prompt slots are fixed")
}

pub fn silver_questions(record: &ClaimRecord, judge: &Judge) -> Result<SilverResult, FunnelError> {
    let reply = judge
        .generate(TemplateId::SilverDecompose, &silver_prompt(record))
        .map_err(|e| FunnelError::stage("silver", format!("{}: {e}", record.id)))?;
    let qs = parse_question_list(&reply);
    Ok(if qs.is_empty() {
        SilverResult::Unparsable
    } else {
        SilverResult::Questions(qs)
    })
}

/// Stores n* on the record. A record that already carries a count keeps it
/// and is not sent to the model.
pub fn silver_decompose(
    mut record: ClaimRecord,
    judge: &Judge,
) -> Result<Result<ClaimRecord, ClaimRecord>, FunnelError> {
    if record.silver_question_count.is_some() {
        return Ok(Ok(record));
    }
    match silver_questions(&record, judge)? {
        SilverResult::Questions(qs) => {
            record.silver_question_count = Some(qs.len() as u32);
            Ok(Ok(record))
        }
        SilverResult::Unparsable => Ok(Err(record)),
    }
}

/// Decomposes every record and keeps those with at least `min_questions`.
pub fn silver_stage(records: Vec<ClaimRecord>, judge: &Judge, min_questions: u32) -> Result<StageOutcome, FunnelError> {
    let decomposed = par::try_map(&records, |r| silver_decompose(r.clone(), judge))?;
    let mut updated = Vec::with_capacity(records.len());
    let mut verdicts = Vec::with_capacity(records.len());
    for d in decomposed {
        match d {
            Ok(r) => {
                let few = r.silver_question_count.unwrap_or(0) < min_questions;
                verdicts.push(few.then_some("silver-too-few-questions"));
                updated.push(r);
            }
            Err(r) => {
                verdicts.push(Some("silver-unparsable"));
                updated.push(r);
            }
        }
    }
    Ok(StageOutcome::split(updated, verdicts))
}

/// Keeps records whose stored n* reaches `min_questions`.
pub fn silver_filter(records: Vec<ClaimRecord>, min_questions: u32) -> StageOutcome {
    let verdicts = records
        .iter()
        .map(|r| match r.silver_question_count {
            None => Some("silver-missing"),
            Some(n) if n < min_questions => Some("silver-too-few-questions"),
            Some(_) => None,
        })
        .collect();
    StageOutcome::split(records, verdicts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Label;
    use crate::synth::scripted::{reply_questions, scripted_judge, JudgeCall};
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    fn rec(id: &str, claim: &str) -> ClaimRecord {
        ClaimRecord {
            id: id.into(),
            claim: claim.into(),
            evidence: vec!["doc".into()],
            label: Some(Label::Supported),
            source: "s".into(),
            meta: Default::default(),
            silver_question_count: None,
        }
    }

    fn judge(calls: Arc<AtomicUsize>) -> Judge {
        Judge::new(Arc::new(scripted_judge("silver", move |c| {
            calls.fetch_add(1, Ordering::SeqCst);
            match c {
                JudgeCall::SilverDecompose { claim, .. } => match claim.as_str() {
                    "one" => reply_questions(&["Q1?".into()]),
                    "three" => reply_questions(&["Q1?".into(), "Q2?".into(), "Q3?".into()]),
                    _ => "I cannot help with that".into(),
                },
                _ => String::new(),
            }
        })))
    }

    #[test]
    fn silver_examples() {
        let calls = Arc::new(AtomicUsize::new(0));
        let j = judge(calls.clone());
        let out = silver_stage(vec![rec("a", "one"), rec("b", "three"), rec("c", "other")], &j, 2).unwrap();
        assert_eq!(out.kept.len(), 1);
        assert_eq!(out.kept[0].silver_question_count, Some(3));
        let reasons: Vec<&str> = out.rejected.iter().map(|r| r.reason.as_str()).collect();
        assert_eq!(reasons, vec!["silver-too-few-questions", "silver-unparsable"]);
        assert_eq!(calls.load(Ordering::SeqCst), 3);

        let again = silver_stage(vec![rec("b", "three")], &j, 2).unwrap();
        assert_eq!(again.kept, out.kept);
        assert_eq!(calls.load(Ordering::SeqCst), 3);
        assert_eq!(silver_filter(out.kept.clone(), 2).kept, out.kept);
    }
}
