//! The XML-delimited verification trace: a `<think>` block, question/answer
//! cycles each optionally followed by a `<think>`, and one `<verification>`
//! verdict.
//!
//! [`parse_trace`] never fails. It evaluates a fixed ten-item format checklist
//! and only reconstructs a [`Trace`] when the structure is sound; everything
//! else is reported as data so the format reward stays graded on messy output.

use serde::{Deserialize, Serialize};

use crate::corpus::Label;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cycle {
    pub question: String,
    pub answer: String,
    pub post_think: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub initial_think: String,
    pub cycles: Vec<Cycle>,
    pub verdict: Label,
}

impl Trace {
    pub fn questions(&self) -> Vec<&str> {
        self.cycles.iter().map(|c| c.question.as_str()).collect()
    }

    pub fn answers(&self) -> Vec<&str> {
        self.cycles.iter().map(|c| c.answer.as_str()).collect()
    }
}

/// The format checklist, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormatCondition {
    HasThink,
    ThinkBeforeQuestion,
    HasQuestion,
    BalancedQA,
    Alternation,
    SingleVerification,
    ValidVerdict,
    WellNested,
    NothingAfterVerification,
    MinTwoCycles,
}

impl FormatCondition {
    pub const ALL: [FormatCondition; 10] = [
        FormatCondition::HasThink,
        FormatCondition::ThinkBeforeQuestion,
        FormatCondition::HasQuestion,
        FormatCondition::BalancedQA,
        FormatCondition::Alternation,
        FormatCondition::SingleVerification,
        FormatCondition::ValidVerdict,
        FormatCondition::WellNested,
        FormatCondition::NothingAfterVerification,
        FormatCondition::MinTwoCycles,
    ];
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub trace: Option<Trace>,
    pub conditions: Vec<(FormatCondition, bool)>,
    pub raw_verdict_text: Option<String>,
    /// Best-effort question/answer pairs (each question immediately followed
    /// by an answer). Equal to the trace's cycles when the trace is present.
    pub cycles: Vec<Cycle>,
}

impl ParseReport {
    pub fn satisfied(&self) -> usize {
        self.conditions.iter().filter(|(_, ok)| *ok).count()
    }

    /// Satisfied conditions over the checklist length.
    pub fn fraction(&self) -> f64 {
        self.satisfied() as f64 / self.conditions.len() as f64
    }

    pub fn holds(&self, cond: FormatCondition) -> bool {
        self.conditions.iter().any(|&(c, ok)| c == cond && ok)
    }

    /// Verdict of the last verification block, if it parses, even when the
    /// trace as a whole could not be reconstructed.
    pub fn verdict(&self) -> Option<Label> {
        match &self.trace {
            Some(t) => Some(t.verdict),
            None => self.raw_verdict_text.as_deref().and_then(parse_label),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Think,
    Question,
    Answer,
    Verification,
}

impl Kind {
    fn from_name(name: &str) -> Option<Kind> {
        match name.to_ascii_lowercase().as_str() {
            "think" => Some(Kind::Think),
            "question" => Some(Kind::Question),
            "answer" => Some(Kind::Answer),
            "verification" => Some(Kind::Verification),
            _ => None,
        }
    }
}

struct Tag {
    kind: Kind,
    closing: bool,
    start: usize,
    end: usize,
}

struct Block {
    kind: Kind,
    start: usize,
    content: String,
}

/// Finds the recognized tags; unknown tags stay part of the text.
fn scan_tags(text: &str) -> Vec<Tag> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while let Some(off) = text[i..].find('<') {
        let start = i + off;
        let Some(close_off) = text[start..].find('>') else {
            break;
        };
        let end = start + close_off + 1;
        let inner = &text[start + 1..end - 1];
        let (closing, name) = match inner.strip_prefix('/') {
            Some(rest) => (true, rest),
            None => (false, inner),
        };
        match Kind::from_name(name.trim()) {
            Some(kind) if !name.is_empty() && !name.contains('<') => {
                out.push(Tag {
                    kind,
                    closing,
                    start,
                    end,
                });
                i = end;
            }
            _ => i = start + 1,
        }
        if i >= bytes.len() {
            break;
        }
    }
    out
}

fn parse_label(raw: &str) -> Option<Label> {
    raw.trim_matches(|c: char| !c.is_alphanumeric()).parse().ok()
}

/// Case-insensitive "I don't know" / "I do not know" anywhere in the answer.
pub fn is_abstention(answer: &str) -> bool {
    let a = answer.trim().to_lowercase().replace('\u{2019}', "'");
    a.contains("i don't know") || a.contains("i do not know")
}

pub fn parse_trace(text: &str) -> ParseReport {
    let tags = scan_tags(text);
    let mut nested_ok = !tags.is_empty();
    let mut stack: Vec<&Tag> = Vec::new();
    let mut blocks: Vec<Block> = Vec::new();
    let mut last_verification_close: Option<usize> = None;

    for tag in &tags {
        if !tag.closing {
            if !stack.is_empty() {
                nested_ok = false;
            }
            stack.push(tag);
            continue;
        }
        match stack.iter().rposition(|o| o.kind == tag.kind) {
            Some(pos) => {
                if pos + 1 != stack.len() {
                    nested_ok = false;
                }
                let open = stack[pos];
                stack.truncate(pos);
                blocks.push(Block {
                    kind: tag.kind,
                    start: open.start,
                    content: text[open.end..tag.start].trim().to_string(),
                });
                if tag.kind == Kind::Verification {
                    last_verification_close = Some(tag.end);
                }
            }
            None => nested_ok = false,
        }
    }
    if !stack.is_empty() {
        nested_ok = false;
    }
    blocks.sort_by_key(|b| b.start);

    let first = |k: Kind| blocks.iter().find(|b| b.kind == k).map(|b| b.start);
    let count = |k: Kind| blocks.iter().filter(|b| b.kind == k).count();
    let n_q = count(Kind::Question);
    let n_a = count(Kind::Answer);
    let verifications: Vec<&Block> = blocks.iter().filter(|b| b.kind == Kind::Verification).collect();

    let qa: Vec<&Block> = blocks
        .iter()
        .filter(|b| matches!(b.kind, Kind::Question | Kind::Answer))
        .collect();
    let alternation = !qa.is_empty()
        && qa.len().is_multiple_of(2)
        && qa.iter().enumerate().all(|(i, b)| {
            let want = if i % 2 == 0 { Kind::Question } else { Kind::Answer };
            b.kind == want && !b.content.is_empty()
        });
    let last_qa = qa.last().map(|b| b.start);
    let single_verification = verifications.len() == 1 && last_qa.is_none_or(|s| verifications[0].start > s);
    let raw_verdict_text = verifications.last().map(|b| b.content.clone());
    let verdict = raw_verdict_text.as_deref().and_then(parse_label);
    let nothing_after = last_verification_close.is_some_and(|end| text[end..].trim().is_empty());

    let values = [
        first(Kind::Think).is_some(),
        matches!((first(Kind::Think), first(Kind::Question)), (Some(t), Some(q)) if t < q),
        n_q >= 1,
        n_q >= 1 && n_q == n_a,
        alternation,
        single_verification,
        verdict.is_some(),
        nested_ok,
        nothing_after,
        n_q >= 2,
    ];
    let conditions: Vec<(FormatCondition, bool)> = FormatCondition::ALL.iter().copied().zip(values).collect();

    let (initial_think, cycles) = build_cycles(&blocks);
    let trace = if alternation && single_verification && nested_ok {
        verdict.map(|verdict| Trace {
            initial_think,
            cycles: cycles.clone(),
            verdict,
        })
    } else {
        None
    };

    ParseReport {
        trace,
        conditions,
        raw_verdict_text,
        cycles,
    }
}

fn build_cycles(blocks: &[Block]) -> (String, Vec<Cycle>) {
    let mut initial: Vec<&str> = Vec::new();
    let mut cycles: Vec<Cycle> = Vec::new();
    let mut pending_q: Option<&str> = None;
    for b in blocks {
        match b.kind {
            Kind::Think => {
                if pending_q.is_some() {
                    continue;
                }
                match cycles.last_mut() {
                    None => initial.push(&b.content),
                    Some(c) => {
                        c.post_think = Some(match c.post_think.take() {
                            Some(prev) => format!("{prev}\n\n{}", b.content),
                            None => b.content.clone(),
                        })
                    }
                }
            }
            Kind::Question => pending_q = Some(&b.content),
            Kind::Answer => {
                if let Some(q) = pending_q.take().filter(|q| !q.is_empty() && !b.content.is_empty()) {
                    cycles.push(Cycle {
                        question: q.to_string(),
                        answer: b.content.clone(),
                        post_think: None,
                    });
                }
            }
            Kind::Verification => break,
        }
    }
    (initial.join("\n\n"), cycles)
}

pub fn render_trace(trace: &Trace) -> String {
    let mut out = String::new();
    let block = |out: &mut String, tag: &str, body: &str| {
        out.push_str(&format!("<{tag}>\n{body}\n</{tag}>\n\n"));
    };
    block(&mut out, "think", &trace.initial_think);
    for c in &trace.cycles {
        block(&mut out, "question", &c.question);
        block(&mut out, "answer", &c.answer);
        if let Some(t) = &c.post_think {
            block(&mut out, "think", t);
        }
    }
    out.push_str(&format!("<verification>\n{}\n</verification>\n", trace.verdict));
    out
}
