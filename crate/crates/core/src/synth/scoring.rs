//! A small scoring bundle: claims with silver counts, G rollouts per claim
//! and judge fixtures recorded from a deterministic scripted judge, so the
//! `score`, `score-group` and `eval` commands run offline.

use std::sync::{Arc, Mutex};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;
use xxhash_rust::xxh3::xxh3_64;

use crate::backends::{Embedder, FixtureSet, FnJudge, HashingEmbedder, Judge, ThreeWayVerdict};
use crate::corpus::{ClaimRecord, Label};
use crate::rewards::{score_group, total_reward, RewardBackends, SupervisionMode};
use crate::synth::scripted::{
    atomicity_passing, classify_prompt, reply_atomicity, reply_binary, reply_verdict, JudgeCall,
};
use crate::trace::{render_trace, Cycle, Trace};

pub const SCORING_DIR: &str = "scoring";
pub const GROUP_SIZE: usize = 8;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceRow {
    pub id: String,
    pub trace: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredRow {
    pub id: String,
    pub pred: Label,
}

struct Fact {
    question: &'static str,
    answer: &'static str,
}

struct Item {
    id: &'static str,
    claim: &'static str,
    evidence: [&'static str; 3],
    label: Label,
    silver: u32,
    facts: [Fact; 3],
}

const ITEMS: [Item; 4] = [
    Item {
        id: "score-01",
        claim: "Alice Moreau founded the library in Oslo in 1950",
        evidence: [
            "The Oslo public library opened its doors in 1950.",
            "Its founder, Alice Moreau, had moved to Oslo after the war.",
            "The library later expanded into a second building.",
        ],
        label: Label::Supported,
        silver: 2,
        facts: [
            Fact {
                question: "Who founded the library in Oslo?",
                answer: "Alice Moreau founded it.",
            },
            Fact {
                question: "When did the Oslo library open?",
                answer: "It opened in 1950.",
            },
            Fact {
                question: "Did the library expand?",
                answer: "Yes, into a second building.",
            },
        ],
    },
    Item {
        id: "score-02",
        claim: "Bruno Tanaka designed the observatory in Quito in 1921",
        evidence: [
            "The Quito observatory was completed in 1921.",
            "Records credit the engineer Hector Salas with its design.",
            "Bruno Tanaka served as its first director.",
        ],
        label: Label::Refuted,
        silver: 3,
        facts: [
            Fact {
                question: "Who designed the Quito observatory?",
                answer: "Hector Salas designed it, not Bruno Tanaka.",
            },
            Fact {
                question: "When was the observatory completed?",
                answer: "It was completed in 1921.",
            },
            Fact {
                question: "What role did Bruno Tanaka have?",
                answer: "He was the first director.",
            },
        ],
    },
    Item {
        id: "score-03",
        claim: "Chiara Lindqvist chaired the rowing club in Turku in 1988",
        evidence: [
            "Chiara Lindqvist was elected chair of the Turku rowing club in 1988.",
            "She held the post for six seasons.",
            "The club trains on the Aura river.",
        ],
        label: Label::Supported,
        silver: 2,
        facts: [
            Fact {
                question: "Who chaired the Turku rowing club in 1988?",
                answer: "Chiara Lindqvist.",
            },
            Fact {
                question: "How long did she hold the post?",
                answer: "Six seasons.",
            },
            Fact {
                question: "Where does the club train?",
                answer: "I don't know.",
            },
        ],
    },
    Item {
        id: "score-04",
        claim: "Dmitri Osei restored the shipyard in Porto in 1975",
        evidence: [
            "The Porto shipyard closed in 1969 and was never reopened.",
            "Dmitri Osei wrote a history of the yard in 1975.",
            "The site is now a museum.",
        ],
        label: Label::Refuted,
        silver: 2,
        facts: [
            Fact {
                question: "Was the Porto shipyard restored in 1975?",
                answer: "No, it closed in 1969 and was never reopened.",
            },
            Fact {
                question: "What did Dmitri Osei do in 1975?",
                answer: "He wrote a history of the yard.",
            },
            Fact {
                question: "What is the site now?",
                answer: "A museum.",
            },
        ],
    },
];

pub fn claims() -> Vec<ClaimRecord> {
    ITEMS
        .iter()
        .map(|it| ClaimRecord {
            id: it.id.into(),
            claim: it.claim.into(),
            evidence: it.evidence.iter().map(|s| s.to_string()).collect(),
            label: Some(it.label),
            source: "scoring".into(),
            meta: Default::default(),
            silver_question_count: Some(it.silver),
        })
        .collect()
}

/// The scripted judge the fixtures are recorded from. Coverage reads the
/// answers for a negation; the other templates pass unless the text hashes
/// into a small failing bucket.
pub fn reference_reply(call: &JudgeCall) -> String {
    let bucket = |s: &str| xxh3_64(s.as_bytes()) % 5;
    match call {
        JudgeCall::Coverage { answers, .. } => {
            let text = answers.join(" ").to_lowercase();
            let v = if answers.is_empty() {
                ThreeWayVerdict::NotEnoughInfo
            } else if text.contains(" no") || text.starts_with("no") || text.contains(" not ") {
                ThreeWayVerdict::Refuted
            } else {
                ThreeWayVerdict::Supported
            };
            reply_verdict(v)
        }
        JudgeCall::Answerability { question, .. } => reply_binary(bucket(question) != 0),
        JudgeCall::Atomicity { question, .. } => {
            reply_atomicity(&atomicity_passing(if bucket(question) == 1 { 4 } else { 5 }))
        }
        JudgeCall::Correctness { sentence, .. } => reply_binary(bucket(sentence) != 2),
        _ => "unsupported request".into(),
    }
}

/// G rollouts per claim: random cycle subsets, verdicts mostly matching the
/// gold label, and an occasional truncated trace.
pub fn rollouts(seed: u64) -> Vec<TraceRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    for it in &ITEMS {
        for _ in 0..GROUP_SIZE {
            let k = rng.gen_range(1..=3);
            let start = rng.gen_range(0..3);
            let cycles = (0..k)
                .map(|j| {
                    let f = &it.facts[(start + j) % 3];
                    Cycle {
                        question: f.question.into(),
                        answer: f.answer.into(),
                        post_think: rng.gen_bool(0.5).then(|| "That settles this part.".to_string()),
                    }
                })
                .collect();
            let verdict = if rng.gen_bool(0.7) { it.label } else { it.label.flip() };
            let trace = Trace {
                initial_think: format!("I need to check: {}.", it.claim),
                cycles,
                verdict,
            };
            let mut text = render_trace(&trace);
            if rng.gen_bool(0.1) {
                text.truncate(text.find("<verification>").unwrap_or(text.len()));
            }
            out.push(TraceRow {
                id: it.id.into(),
                trace: text,
            });
        }
    }
    out
}

/// Judge fixtures covering every prompt the bundle's traces produce in
/// labeled and unlabeled scoring.
pub fn record_fixtures(claims: &[ClaimRecord], rows: &[TraceRow]) -> FixtureSet {
    let log = Arc::new(Mutex::new(FixtureSet::default()));
    let sink = log.clone();
    let judge = Judge::new(Arc::new(FnJudge::new("recorder", move |prompt| {
        let reply = reference_reply(&classify_prompt(prompt));
        sink.lock().unwrap().insert_text(prompt, json!(reply));
        Ok(reply)
    })));
    let embedder = Embedder::new(Arc::new(HashingEmbedder::default()));
    let backends = RewardBackends {
        judge: &judge,
        embedder: &embedder,
    };
    for c in claims {
        let traces: Vec<&str> = rows.iter().filter(|r| r.id == c.id).map(|r| r.trace.as_str()).collect();
        for labeled in [true, false] {
            score_group(c, &traces, labeled, backends).expect("scripted judge never fails");
        }
        for t in &traces {
            total_reward(c, t, SupervisionMode::Unlabeled(None), backends).expect("scripted judge never fails");
        }
    }
    let set = log.lock().unwrap().clone();
    set
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    crate::io::to_jsonl(rows).expect("rows serialize")
}

/// Files of the scoring bundle as (relative path, contents).
pub fn bundle_files() -> Vec<(String, String)> {
    let claims = claims();
    let groups = rollouts(17);
    let singles: Vec<TraceRow> = claims
        .iter()
        .map(|c| {
            groups
                .iter()
                .find(|r| r.id == c.id)
                .expect("every claim has rollouts")
                .clone()
        })
        .collect();
    let perfect: Vec<PredRow> = claims
        .iter()
        .map(|c| PredRow {
            id: c.id.clone(),
            pred: c.label.expect("labeled"),
        })
        .collect();
    let fixtures = record_fixtures(&claims, &groups);
    vec![
        ("claims.jsonl".into(), jsonl(&claims)),
        ("traces.jsonl".into(), jsonl(&singles)),
        ("groups.jsonl".into(), jsonl(&groups)),
        ("preds-perfect.jsonl".into(), jsonl(&perfect)),
        ("judge.jsonl".into(), fixtures.to_jsonl()),
    ]
}
