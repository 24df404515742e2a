//! The three judge-backed rewards: coverage, leave-one-out necessity and
//! joint multiplicative quality.

use serde::{Deserialize, Serialize};

use crate::backends::{
    parse_atomicity, parse_binary_answer, parse_verdict, render_prompt, BackendError, Judge, TemplateId,
    ThreeWayVerdict,
};
use crate::corpus::Label;
use crate::par;
use crate::trace::{is_abstention, Cycle};

fn render(id: TemplateId, slots: &[(&str, &str)]) -> String {
    render_prompt(id, slots).expect("reward prompts fill every slot of their template")
}

/// Answers as the numbered list shown to the coverage judge.
pub fn format_answers(answers: &[&str]) -> String {
    answers
        .iter()
        .enumerate()
        .map(|(i, a)| format!("{}. {}", i + 1, a.trim()))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Coverage judge's verdict from the answers and claim alone; `None` when the
/// reply cannot be parsed.
pub fn coverage_verdict(claim: &str, answers: &[&str], judge: &Judge) -> Result<Option<ThreeWayVerdict>, BackendError> {
    let prompt = render(
        TemplateId::CoverageVerdict,
        &[("answers", &format_answers(answers)), ("claim", claim)],
    );
    Ok(parse_verdict(&judge.generate(TemplateId::CoverageVerdict, &prompt)?).ok())
}

fn matches(v: Option<ThreeWayVerdict>, reference: Label) -> bool {
    v == Some(ThreeWayVerdict::from(reference))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageScore {
    pub value: f64,
    pub verdict: Option<ThreeWayVerdict>,
}

impl CoverageScore {
    pub fn unparsable(&self) -> bool {
        self.verdict.is_none()
    }
}

/// 1 iff the judge reconstructs `reference` from the answers. NotEnoughInfo
/// and unparsable replies both score 0.
pub fn coverage_reward(
    claim: &str,
    answers: &[&str],
    reference: Label,
    judge: &Judge,
) -> Result<CoverageScore, BackendError> {
    let verdict = coverage_verdict(claim, answers, judge)?;
    Ok(CoverageScore {
        value: if matches(verdict, reference) { 1.0 } else { 0.0 },
        verdict,
    })
}

/// Judge verdicts on the full answer set and with one answer left out.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NecessityVerdictPair {
    pub full: Option<ThreeWayVerdict>,
    pub loo: Option<ThreeWayVerdict>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityScore {
    pub per_question: Vec<f64>,
    pub trace: f64,
    pub pairs: Vec<NecessityVerdictPair>,
}

/// The four-state leave-one-out matrix.
pub fn necessity_cell(full_correct: bool, loo_correct: bool) -> f64 {
    match (full_correct, loo_correct) {
        (true, false) => 1.0,
        (true, true) => 0.5,
        (false, false) => 0.0,
        (false, true) => -1.0,
    }
}

fn min_or_zero(xs: &[f64]) -> f64 {
    xs.iter().copied().reduce(f64::min).unwrap_or(0.0)
}

fn loo_verdicts(
    claim: &str,
    answers: &[&str],
    judge: &Judge,
) -> Result<(Option<ThreeWayVerdict>, Vec<Option<ThreeWayVerdict>>), BackendError> {
    let full = coverage_verdict(claim, answers, judge)?;
    let loo = par::map_indexed(answers.len(), |i| {
        let rest: Vec<&str> = answers
            .iter()
            .enumerate()
            .filter(|(j, _)| *j != i)
            .map(|(_, a)| *a)
            .collect();
        coverage_verdict(claim, &rest, judge)
    })
    .into_iter()
    .collect::<Result<Vec<_>, _>>()?;
    Ok((full, loo))
}

/// Labeled necessity: each question scored by the matrix against `gold`,
/// aggregated by min. Unparsable verdicts count as wrong.
pub fn necessity_reward(
    claim: &str,
    answers: &[&str],
    gold: Label,
    judge: &Judge,
) -> Result<NecessityScore, BackendError> {
    let (full, loo) = loo_verdicts(claim, answers, judge)?;
    Ok(necessity_from_verdicts(full, &loo, gold))
}

pub fn necessity_from_verdicts(
    full: Option<ThreeWayVerdict>,
    loo: &[Option<ThreeWayVerdict>],
    gold: Label,
) -> NecessityScore {
    let per_question: Vec<f64> = loo
        .iter()
        .map(|&l| necessity_cell(matches(full, gold), matches(l, gold)))
        .collect();
    NecessityScore {
        trace: min_or_zero(&per_question),
        pairs: loo.iter().map(|&l| NecessityVerdictPair { full, loo: l }).collect(),
        per_question,
    }
}

/// Unlabeled necessity: 1 iff leaving the answer out changes the judge's
/// verdict. A run whose reply is unparsable gives no evidence of a flip and
/// scores 0.
pub fn necessity_reward_relative(claim: &str, answers: &[&str], judge: &Judge) -> Result<NecessityScore, BackendError> {
    let (full, loo) = loo_verdicts(claim, answers, judge)?;
    Ok(relative_from_verdicts(full, &loo))
}

pub fn relative_from_verdicts(full: Option<ThreeWayVerdict>, loo: &[Option<ThreeWayVerdict>]) -> NecessityScore {
    let per_question: Vec<f64> = loo
        .iter()
        .map(|&l| match (full, l) {
            (Some(f), Some(l)) if f != l => 1.0,
            _ => 0.0,
        })
        .collect();
    NecessityScore {
        trace: min_or_zero(&per_question),
        pairs: loo.iter().map(|&l| NecessityVerdictPair { full, loo: l }).collect(),
        per_question,
    }
}

/// Judge factors for one question; `None` marks an unparsable reply (scored
/// as 0). `corr` is not asked for abstentions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointFactors {
    pub ans: Option<f64>,
    pub atom: Option<f64>,
    pub corr: Option<f64>,
    pub abstention: bool,
}

impl JointFactors {
    pub fn term(&self) -> f64 {
        let ans = self.ans.unwrap_or(0.0);
        let atom = self.atom.unwrap_or(0.0);
        if self.abstention {
            ans * atom
        } else {
            ans * atom * self.corr.unwrap_or(0.0)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JointScore {
    pub per_question: Vec<f64>,
    pub value: f64,
    pub factors: Vec<JointFactors>,
}

pub fn joint_from_factors(factors: Vec<JointFactors>) -> JointScore {
    let per_question: Vec<f64> = factors.iter().map(JointFactors::term).collect();
    let value = if per_question.is_empty() {
        0.0
    } else {
        per_question.iter().sum::<f64>() / per_question.len() as f64
    };
    JointScore {
        per_question,
        value,
        factors,
    }
}

fn question_factors(document: &str, claim: &str, cycle: &Cycle, judge: &Judge) -> Result<JointFactors, BackendError> {
    let ans_prompt = render(
        TemplateId::Answerability,
        &[("document", document), ("question", &cycle.question)],
    );
    let ans = parse_binary_answer(&judge.generate(TemplateId::Answerability, &ans_prompt)?)
        .ok()
        .map(f64::from);
    let atom_prompt = render(
        TemplateId::AtomicityChecklist,
        &[("claim", claim), ("question", &cycle.question)],
    );
    let atom = parse_atomicity(&judge.generate(TemplateId::AtomicityChecklist, &atom_prompt)?)
        .ok()
        .map(|a| a.fraction());
    let abstention = is_abstention(&cycle.answer);
    let corr = if abstention {
        None
    } else {
        let prompt = render(
            TemplateId::AnswerCorrectness,
            &[("document", document), ("sentence", &cycle.answer)],
        );
        parse_binary_answer(&judge.generate(TemplateId::AnswerCorrectness, &prompt)?)
            .ok()
            .map(f64::from)
    };
    Ok(JointFactors {
        ans,
        atom,
        corr,
        abstention,
    })
}

/// Mean over questions of answerability x atomicity x correctness, with the
/// correctness factor dropped for abstentions.
pub fn joint_quality_reward(
    document: &str,
    claim: &str,
    cycles: &[Cycle],
    judge: &Judge,
) -> Result<JointScore, BackendError> {
    let factors = par::try_map(cycles, |c| question_factors(document, claim, c, judge))?;
    Ok(joint_from_factors(factors))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn matrix_cells() {
        assert_eq!(necessity_cell(true, false), 1.0);
        assert_eq!(necessity_cell(true, true), 0.5);
        assert_eq!(necessity_cell(false, false), 0.0);
        assert_eq!(necessity_cell(false, true), -1.0);
    }

    #[test]
    fn necessity_examples() {
        use ThreeWayVerdict::*;
        let s = necessity_from_verdicts(Some(Supported), &[Some(Refuted), Some(Supported)], Label::Supported);
        assert_eq!(s.per_question, vec![1.0, 0.5]);
        assert_eq!(s.trace, 0.5);
        let harmful = necessity_from_verdicts(Some(NotEnoughInfo), &[Some(Supported), None], Label::Supported);
        assert_eq!(harmful.per_question, vec![-1.0, 0.0]);
        assert_eq!(harmful.trace, -1.0);
    }

    #[test]
    fn relative_examples() {
        use ThreeWayVerdict::*;
        let s = relative_from_verdicts(Some(Supported), &[Some(NotEnoughInfo), Some(Supported)]);
        assert_eq!(s.per_question, vec![1.0, 0.0]);
        assert_eq!(s.trace, 0.0);
        assert_eq!(relative_from_verdicts(Some(Refuted), &[Some(NotEnoughInfo)]).trace, 1.0);
        assert_eq!(relative_from_verdicts(None, &[Some(Refuted)]).trace, 0.0);
    }

    fn f(ans: f64, atom: f64, corr: Option<f64>) -> JointFactors {
        JointFactors {
            ans: Some(ans),
            atom: Some(atom),
            corr,
            abstention: corr.is_none(),
        }
    }

    #[test]
    fn joint_examples() {
        assert_eq!(
            joint_from_factors(vec![f(1.0, 1.0, Some(1.0)), f(1.0, 1.0, None)]).value,
            1.0
        );
        let j = joint_from_factors(vec![f(1.0, 0.8, Some(1.0)), f(1.0, 1.0, Some(1.0))]);
        assert!((j.value - 0.9).abs() < 1e-12);
        let z = joint_from_factors(vec![f(1.0, 0.8, Some(0.0)), f(1.0, 1.0, Some(1.0))]);
        assert_eq!(z.per_question, vec![0.0, 1.0]);
        let unparsable = JointFactors {
            ans: None,
            ..f(1.0, 1.0, Some(1.0))
        };
        assert_eq!(unparsable.term(), 0.0);
    }

    #[test]
    fn answers_numbered() {
        assert_eq!(format_answers(&["a ", "b"]), "1. a\n2. b");
        assert_eq!(format_answers(&[]), "");
    }

    fn arb_factors() -> impl Strategy<Value = JointFactors> {
        (
            prop::sample::select(vec![0.0, 1.0]),
            (0u8..=5).prop_map(|k| f64::from(k) / 5.0),
            prop::option::of(prop::sample::select(vec![0.0, 1.0])),
        )
            .prop_map(|(a, t, c)| f(a, t, c))
    }

    proptest! {
        #[test]
        fn zero_absorption(fs in prop::collection::vec(arb_factors(), 1..8), which in 0usize..8, slot in 0usize..3) {
            let i = which % fs.len();
            let before = joint_from_factors(fs.clone());
            let mut g = fs.clone();
            match slot {
                0 => g[i].ans = Some(0.0),
                1 => g[i].atom = Some(0.0),
                _ => if !g[i].abstention { g[i].corr = Some(0.0) } else { g[i].ans = Some(0.0) },
            }
            let after = joint_from_factors(g);
            prop_assert_eq!(after.per_question[i], 0.0);
            for k in 0..fs.len() {
                if k != i {
                    prop_assert_eq!(after.per_question[k], before.per_question[k]);
                }
            }
        }

        #[test]
        fn abstention_never_uses_corr(atom in 0u8..=5, corr in prop::option::of(0.0f64..1.0)) {
            let x = JointFactors { ans: Some(1.0), atom: Some(f64::from(atom) / 5.0), corr, abstention: true };
            prop_assert_eq!(x.term(), f64::from(atom) / 5.0);
        }

        #[test]
        fn necessity_min_permutation_invariant(cells in prop::collection::vec((any::<bool>(), any::<bool>()), 1..10)) {
            let scores: Vec<f64> = cells.iter().map(|&(a, b)| necessity_cell(a, b)).collect();
            let mut rev = scores.clone();
            rev.reverse();
            prop_assert_eq!(min_or_zero(&scores), min_or_zero(&rev));
            prop_assert!(scores.iter().all(|s| *s >= min_or_zero(&scores)));
        }
    }
}
