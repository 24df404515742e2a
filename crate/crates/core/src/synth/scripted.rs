//! Scripted judges: a rendered prompt is mapped back to its template and slot
//! values, and a closure decides the reply.

use std::collections::BTreeMap;

use crate::backends::{Atomicity, BackendError, FnJudge, TemplateId, ThreeWayVerdict};

/// A judge request decoded from its rendered prompt.
#[derive(Debug, Clone, PartialEq)]
pub enum JudgeCall {
    Coverage { answers: Vec<String>, claim: String },
    Answerability { document: String, question: String },
    Atomicity { claim: String, question: String },
    Correctness { document: String, sentence: String },
    SilverDecompose { evidence: String, claim: String },
    TraceGen { evidence: String, claim: String },
    Unknown(String),
}

fn block(prompt: &str, tag: &str) -> String {
    let open = format!("<{tag}>\n");
    let close = format!("\n</{tag}>");
    let Some(start) = prompt.find(&open).map(|i| i + open.len()) else {
        return String::new();
    };
    match prompt[start..].find(&close) {
        Some(len) => prompt[start..start + len].to_string(),
        None => String::new(),
    }
}

fn first_line(id: TemplateId) -> &'static str {
    id.template().body.lines().next().unwrap_or("")
}

/// Which template rendered this prompt, if any.
pub fn template_of(prompt: &str) -> Option<TemplateId> {
    TemplateId::ALL.into_iter().find(|t| prompt.starts_with(first_line(*t)))
}

pub fn classify_prompt(prompt: &str) -> JudgeCall {
    match template_of(prompt) {
        Some(TemplateId::CoverageVerdict) => {
            let answers = block(prompt, "answers")
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(|l| match l.split_once(". ") {
                    Some((n, rest)) if n.chars().all(|c| c.is_ascii_digit()) => rest.to_string(),
                    _ => l.to_string(),
                })
                .collect();
            JudgeCall::Coverage {
                answers,
                claim: block(prompt, "claim"),
            }
        }
        Some(TemplateId::Answerability) => JudgeCall::Answerability {
            document: block(prompt, "document"),
            question: block(prompt, "question"),
        },
        Some(TemplateId::AtomicityChecklist) => JudgeCall::Atomicity {
            claim: block(prompt, "claim"),
            question: block(prompt, "question"),
        },
        Some(TemplateId::AnswerCorrectness) => JudgeCall::Correctness {
            document: block(prompt, "document"),
            sentence: block(prompt, "sentence"),
        },
        Some(TemplateId::SilverDecompose) => JudgeCall::SilverDecompose {
            evidence: block(prompt, "evidence_document"),
            claim: block(prompt, "claim"),
        },
        Some(TemplateId::TraceGen) => JudgeCall::TraceGen {
            evidence: block(prompt, "evidence_document"),
            claim: block(prompt, "claim"),
        },
        None => JudgeCall::Unknown(prompt.to_string()),
    }
}

pub fn reply_verdict(v: ThreeWayVerdict) -> String {
    let text = match v {
        ThreeWayVerdict::Supported => "Supported",
        ThreeWayVerdict::Refuted => "Refuted",
        ThreeWayVerdict::NotEnoughInfo => "Not Enough Information",
    };
    format!("Reasoning over the answers.\n<verdict>{text}</verdict>")
}

pub fn reply_binary(bit: bool) -> String {
    format!("Brief reasoning.\n<answer>{}</answer>", u8::from(bit))
}

pub fn reply_atomicity(a: &Atomicity) -> String {
    let yn = |b: bool| if b { "YES" } else { "NO" };
    format!(
        "Checked each criterion.\n<answer>\nis_question:{}\nsingle_focus:{}\nno_conjunctions:{}\nverifiable:{}\ngrounded:{}\n</answer>",
        yn(a.is_question),
        yn(a.single_focus),
        yn(a.no_conjunctions),
        yn(a.verifiable),
        yn(a.grounded)
    )
}

/// Atomicity reply passing exactly `k` of the five criteria (first `k` keys).
pub fn atomicity_passing(k: usize) -> Atomicity {
    let b = |i: usize| i < k;
    Atomicity {
        is_question: b(0),
        single_focus: b(1),
        no_conjunctions: b(2),
        verifiable: b(3),
        grounded: b(4),
    }
}

pub fn reply_questions(questions: &[String]) -> String {
    questions
        .iter()
        .enumerate()
        .map(|(i, q)| format!("{}. {q}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// A judge whose reply is computed from the decoded request.
pub fn scripted_judge(id: &str, f: impl Fn(&JudgeCall) -> String + Send + Sync + 'static) -> FnJudge {
    FnJudge::new(id, move |prompt| Ok(f(&classify_prompt(prompt))))
}

/// Like [`scripted_judge`] but the closure may fail.
pub fn fallible_judge(
    id: &str,
    f: impl Fn(&JudgeCall) -> Result<String, BackendError> + Send + Sync + 'static,
) -> FnJudge {
    FnJudge::new(id, move |prompt| f(&classify_prompt(prompt)))
}

/// A judge replying from per-template lookup tables keyed by the decisive
/// slot (the answer list joined by newlines for coverage, the question for
/// answerability and atomicity, the sentence for correctness). Missing keys
/// get the fallback reply of that template.
#[derive(Debug, Clone, Default)]
pub struct JudgeTable {
    pub coverage: BTreeMap<String, ThreeWayVerdict>,
    pub coverage_default: Option<ThreeWayVerdict>,
    pub answerable: BTreeMap<String, bool>,
    pub atomicity: BTreeMap<String, usize>,
    pub correct: BTreeMap<String, bool>,
}

impl JudgeTable {
    pub fn reply(&self, call: &JudgeCall) -> String {
        match call {
            JudgeCall::Coverage { answers, .. } => {
                let key = answers.join("\n");
                match self.coverage.get(&key).copied().or(self.coverage_default) {
                    Some(v) => reply_verdict(v),
                    None => "no verdict".to_string(),
                }
            }
            JudgeCall::Answerability { question, .. } => {
                reply_binary(self.answerable.get(question).copied().unwrap_or(true))
            }
            JudgeCall::Atomicity { question, .. } => {
                reply_atomicity(&atomicity_passing(self.atomicity.get(question).copied().unwrap_or(5)))
            }
            JudgeCall::Correctness { sentence, .. } => {
                reply_binary(self.correct.get(sentence).copied().unwrap_or(true))
            }
            _ => "unsupported request".to_string(),
        }
    }

    pub fn into_judge(self, id: &str) -> FnJudge {
        scripted_judge(id, move |c| self.reply(c))
    }
}
