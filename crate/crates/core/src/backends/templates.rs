use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    TraceGen,
    SilverDecompose,
    Answerability,
    AnswerCorrectness,
    AtomicityChecklist,
    CoverageVerdict,
}

impl TemplateId {
    pub const ALL: [TemplateId; 6] = [
        TemplateId::TraceGen,
        TemplateId::SilverDecompose,
        TemplateId::Answerability,
        TemplateId::AnswerCorrectness,
        TemplateId::AtomicityChecklist,
        TemplateId::CoverageVerdict,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::TraceGen => "trace_gen",
            TemplateId::SilverDecompose => "silver_decompose",
            TemplateId::Answerability => "answerability",
            TemplateId::AnswerCorrectness => "answer_correctness",
            TemplateId::AtomicityChecklist => "atomicity_checklist",
            TemplateId::CoverageVerdict => "coverage_verdict",
        }
    }

    fn body(self) -> &'static str {
        match self {
            TemplateId::TraceGen => include_str!("../../templates/trace_gen.txt"),
            TemplateId::SilverDecompose => include_str!("../../templates/silver_decompose.txt"),
            TemplateId::Answerability => include_str!("../../templates/answerability.txt"),
            TemplateId::AnswerCorrectness => include_str!("../../templates/answer_correctness.txt"),
            TemplateId::AtomicityChecklist => include_str!("../../templates/atomicity_checklist.txt"),
            TemplateId::CoverageVerdict => include_str!("../../templates/coverage_verdict.txt"),
        }
    }

    pub fn template(self) -> PromptTemplate {
        PromptTemplate::new(self, self.body())
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = TemplateError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| TemplateError::UnknownTemplate(s.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TemplateError {
    #[error("missing slot {0:?}")]
    MissingSlot(String),
    #[error("unknown template {0:?}")]
    UnknownTemplate(String),
}

#[derive(Debug, Clone, PartialEq)]
enum Piece {
    Text(&'static str),
    Slot(&'static str),
}

/// A prompt body with `{{name}}` slot markers.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pieces: Vec<Piece>,
}

impl PromptTemplate {
    fn new(id: TemplateId, body: &'static str) -> Self {
        let mut pieces = Vec::new();
        let mut rest = body;
        while let Some(open) = rest.find("{{") {
            let Some(len) = rest[open + 2..].find("}}") else { break };
            let name = &rest[open + 2..open + 2 + len];
            if name.is_empty() || !name.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                pieces.push(Piece::Text(&rest[..open + 2]));
                rest = &rest[open + 2..];
                continue;
            }
            pieces.push(Piece::Text(&rest[..open]));
            pieces.push(Piece::Slot(name));
            rest = &rest[open + 2 + len + 2..];
        }
        pieces.push(Piece::Text(rest));
        Self { id, body, pieces }
    }

    /// Slot names in order of first appearance.
    pub fn slots(&self) -> Vec<&'static str> {
        let mut out: Vec<&'static str> = Vec::new();
        for p in &self.pieces {
            if let Piece::Slot(name) = p {
                if !out.contains(name) {
                    out.push(name);
                }
            }
        }
        out
    }

    /// Substitutes every slot in one pass; slot values are never re-scanned.
    pub fn render(&self, slots: &BTreeMap<&str, &str>) -> Result<String, TemplateError> {
        let mut out = String::with_capacity(self.body.len() + slots.values().map(|v| v.len()).sum::<usize>());
        for p in &self.pieces {
            match p {
                Piece::Text(t) => out.push_str(t),
                Piece::Slot(name) => {
                    let v = slots
                        .get(name)
                        .ok_or_else(|| TemplateError::MissingSlot(name.to_string()))?;
                    out.push_str(v);
                }
            }
        }
        Ok(out)
    }
}

pub fn render_prompt(template: TemplateId, slots: &[(&str, &str)]) -> Result<String, TemplateError> {
    template.template().render(&slots.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slot_inventory() {
        let want: [(TemplateId, &[&str]); 6] = [
            (TemplateId::TraceGen, &["evidence_doc", "claim"]),
            (TemplateId::SilverDecompose, &["evidence_doc", "claim"]),
            (TemplateId::Answerability, &["document", "question"]),
            (TemplateId::AnswerCorrectness, &["document", "sentence"]),
            (TemplateId::AtomicityChecklist, &["claim", "question"]),
            (TemplateId::CoverageVerdict, &["answers", "claim"]),
        ];
        for (id, slots) in want {
            assert_eq!(id.template().slots(), slots, "{id}");
        }
    }

    #[test]
    fn coverage_places_values_in_tags() {
        let p = render_prompt(
            TemplateId::CoverageVerdict,
            &[("answers", "1. Orwell wrote both."), ("claim", "Orwell won the Nobel.")],
        )
        .unwrap();
        assert!(p.contains("<answers>\n1. Orwell wrote both.\n</answers>"));
        assert!(p.contains("<claim>\nOrwell won the Nobel.\n</claim>"));
        assert!(!p.contains("{{"));
        assert!(p.contains("Supported, Refuted, or Not Enough Information"));
    }

    #[test]
    fn missing_slot_named() {
        let err = render_prompt(TemplateId::Answerability, &[("document", "d")]).unwrap_err();
        assert_eq!(err, TemplateError::MissingSlot("question".into()));
        assert!(matches!(
            "nope".parse::<TemplateId>(),
            Err(TemplateError::UnknownTemplate(_))
        ));
        assert_eq!(
            "coverage_verdict".parse::<TemplateId>().unwrap(),
            TemplateId::CoverageVerdict
        );
    }

    #[test]
    fn deterministic_and_not_rescanned() {
        let slots = [("document", "has {{question}} inside"), ("question", "Q?")];
        let a = render_prompt(TemplateId::Answerability, &slots).unwrap();
        let b = render_prompt(TemplateId::Answerability, &slots).unwrap();
        assert_eq!(a, b);
        assert!(a.contains("has {{question}} inside"));
    }

    #[test]
    fn verbatim_spot_checks() {
        let t = TemplateId::TraceGen.template().body;
        assert!(t.starts_with("You are tasked with systematically verifying the accuracy of a claim."));
        assert!(t.contains("## Final Verification"));
        assert!(t.contains("Don't output anything after the final verification tag."));
        let a = TemplateId::AtomicityChecklist.template().body;
        assert!(a.contains(
            "is_question:YES/NO\nsingle_focus:YES/NO\nno_conjunctions:YES/NO\nverifiable:YES/NO\ngrounded:YES/NO"
        ));
        let s = TemplateId::SilverDecompose.template().body;
        assert!(s.contains("- Generate between 1 and 20 questions"));
        assert!(s.trim_end().ends_with("Output the list of questions."));
    }
}
