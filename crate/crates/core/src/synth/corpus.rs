//! Seeded synthetic claim corpora with matching fixture files for every
//! backend, so the whole funnel runs offline.
//!
//! Each corpus mixes clean records with ones built to trip a specific stage:
//! rule violations, out-of-band difficulty, lexical near-duplicates (the last
//! token edited), paraphrases (same slots, different template), holdout copies
//! and unusable silver decompositions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::backends::{verifier_request_text, FixtureSet, HashingEmbedder};
use crate::corpus::{ClaimRecord, Label};
use crate::funnel::silver::silver_prompt;
use crate::synth::scripted::reply_questions;

const FIRST: &[&str] = &[
    "Alice", "Bruno", "Chiara", "Dmitri", "Elena", "Farid", "Greta", "Hiroshi", "Ines", "Jonas", "Kemal", "Lucia",
    "Mateo", "Nadia", "Oskar", "Priya", "Quentin", "Rosa", "Samir", "Tove", "Ulrich", "Vera", "Wendell", "Ximena",
    "Yusuf", "Zofia", "Anselm", "Beatriz", "Corin", "Dagny",
];
const LAST: &[&str] = &[
    "Moreau",
    "Tanaka",
    "Lindqvist",
    "Osei",
    "Fairbanks",
    "Nakamura",
    "Petrov",
    "Alvarez",
    "Okafor",
    "Brennan",
    "Castillo",
    "Haugen",
    "Ibsen",
    "Kowalski",
    "Mbeki",
    "Novak",
    "Quarles",
    "Rautio",
    "Sandoval",
    "Thorsen",
];
const PLACES: &[&str] = &[
    "Oslo",
    "Lagos",
    "Quito",
    "Perth",
    "Hanoi",
    "Tunis",
    "Lima",
    "Riga",
    "Cusco",
    "Dakar",
    "Turku",
    "Porto",
    "Bergen",
    "Accra",
    "Kyoto",
    "Gdansk",
    "Mombasa",
    "Valparaiso",
    "Tbilisi",
    "Halifax",
];
const VERBS: &[&str] = &[
    "founded",
    "directed",
    "funded",
    "chaired",
    "renovated",
    "designed",
    "audited",
    "expanded",
    "managed",
    "restored",
];
const OBJECTS: &[&str] = &[
    "library",
    "bakery",
    "shipyard",
    "observatory",
    "choir",
    "ferry line",
    "textile mill",
    "seed bank",
    "theatre",
    "botanical garden",
    "printing press",
    "rowing club",
];
const FILLER_NOUNS: &[&str] = &[
    "harbour",
    "ledger",
    "council",
    "festival",
    "railway",
    "orchard",
    "warehouse",
    "chapel",
    "market",
    "bridge",
    "school",
    "newspaper",
    "lighthouse",
    "brewery",
    "quarry",
    "tramway",
    "hospital",
    "museum",
    "estate",
    "canal",
];
const FILLER_ADJ: &[&str] = &[
    "modest",
    "crowded",
    "northern",
    "seasonal",
    "municipal",
    "coastal",
    "wooden",
    "private",
    "regional",
    "early",
    "disputed",
    "restored",
    "busy",
    "quiet",
    "minor",
];
const ORGS: &[&str] = &[
    "the Northwind Institute",
    "the Helios Trust",
    "the Granite Society",
    "the Bluewater Council",
    "the Meridian Archive",
    "the Lantern Foundation",
];

pub const SOURCES: [&str; 3] = ["wiki", "news", "sci"];

/// Shape of a generated corpus.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub seed: u64,
    pub base: usize,
    pub lexical_dups: usize,
    pub paraphrases: usize,
    pub holdout_exact: usize,
    pub holdout_paraphrase: usize,
    pub holdout_fresh: usize,
    /// Realistic evidence sizes; otherwise three short passages per record.
    pub full_evidence: bool,
    pub embedding_dim: usize,
}

impl SynthSpec {
    /// The 200-claim corpus the end-to-end funnel runs on.
    pub fn funnel_200() -> Self {
        Self {
            seed: 200,
            base: 170,
            lexical_dups: 16,
            paraphrases: 14,
            holdout_exact: 6,
            holdout_paraphrase: 4,
            holdout_fresh: 10,
            full_evidence: true,
            embedding_dim: 64,
        }
    }

    /// The 500-claim corpus used for dedup and decontamination checks.
    pub fn dedup_500() -> Self {
        Self {
            seed: 500,
            base: 400,
            lexical_dups: 55,
            paraphrases: 45,
            holdout_exact: 12,
            holdout_paraphrase: 8,
            holdout_fresh: 20,
            full_evidence: false,
            embedding_dim: 64,
        }
    }

    pub fn total(&self) -> usize {
        self.base + self.lexical_dups + self.paraphrases
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct HoldoutClaim {
    pub id: String,
    pub claim: String,
}

#[derive(Debug, Clone, Default)]
pub struct SynthFixtures {
    pub judge: FixtureSet,
    pub embedding: FixtureSet,
    pub verifier: FixtureSet,
    pub ner: FixtureSet,
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub claims: Vec<ClaimRecord>,
    pub holdouts: Vec<HoldoutClaim>,
    pub fixtures: SynthFixtures,
}

#[derive(Debug, Clone)]
struct Slots {
    first: &'static str,
    last: &'static str,
    place: &'static str,
    verb: &'static str,
    object: &'static str,
    year: u32,
}

impl Slots {
    fn person(&self) -> String {
        format!("{} {}", self.first, self.last)
    }

    fn render(&self, template: usize) -> String {
        let p = self.person();
        let (o, v, pl, y) = (self.object, self.verb, self.place, self.year);
        match template % 3 {
            0 => format!("{p} {v} the {o} in {pl} in {y}"),
            1 => format!("The {o} in {pl} was {v} by {p} in {y}"),
            _ => format!("In {y} {p} {v} the {o} of {pl}"),
        }
    }

    /// A claim without named entities.
    fn render_anonymous(&self) -> String {
        format!(
            "the {} near the coast was {} during {}",
            self.object, self.verb, self.year
        )
    }

    fn questions(&self, n: usize) -> Vec<String> {
        let p = self.person();
        let all = [
            format!("Who {} the {} in {}?", self.verb, self.object, self.place),
            format!("When was the {} in {} {}?", self.object, self.place, self.verb),
            format!("Is {p} connected to {}?", self.place),
            format!("What did {p} do in {}?", self.year),
            format!("Which records mention the {} in {}?", self.object, self.place),
        ];
        all.into_iter().take(n).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Clean,
    Long,
    TooLong,
    TooShort,
    FewPassages,
    HighOverlap,
    FewEntities,
}

impl Kind {
    fn name(self) -> &'static str {
        match self {
            Kind::Clean => "clean",
            Kind::Long => "long",
            Kind::TooLong => "too-long",
            Kind::TooShort => "too-short",
            Kind::FewPassages => "few-passages",
            Kind::HighOverlap => "high-overlap",
            Kind::FewEntities => "few-entities",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Silver {
    Count(usize),
    Unparsable,
}

struct Gen {
    rng: ChaCha8Rng,
    full: bool,
}

impl Gen {
    fn pick<T: Copy>(&mut self, xs: &[T]) -> T {
        *xs.choose(&mut self.rng).expect("non-empty")
    }

    fn sentence(&mut self, s: &Slots) -> String {
        let (a, n) = (self.pick(FILLER_ADJ), self.pick(FILLER_NOUNS));
        let (a2, n2) = (self.pick(FILLER_ADJ), self.pick(FILLER_NOUNS));
        match self.rng.gen_range(0..5) {
            0 => format!("{} appears in several {a} records kept near {}.", s.last, s.place),
            1 => format!(
                "Accounts from the {}s describe a {a} {n} and a {a2} {n2}.",
                s.year / 10 * 10
            ),
            2 => format!(
                "{} catalogued the {a} {n} beside the {n2} in later surveys.",
                self.pick(ORGS)
            ),
            3 => format!(
                "Residents of {} recall the {a} {n} during {} winters.",
                s.place,
                self.rng.gen_range(2..9)
            ),
            _ => format!(
                "A {a} {n} stood between the {a2} {n2} and the {} for decades.",
                self.pick(FILLER_NOUNS)
            ),
        }
    }

    fn passage(&mut self, s: &Slots, tokens: usize) -> String {
        let mut out = String::new();
        let mut n = 0;
        while n < tokens {
            let sent = self.sentence(s);
            n += sent.split_whitespace().count();
            if !out.is_empty() {
                out.push(' ');
            }
            out.push_str(&sent);
        }
        out
    }

    fn evidence(&mut self, s: &Slots, kind: Kind, claim: &str) -> Vec<String> {
        let (passages, total) = if !self.full {
            (3, 120)
        } else {
            match kind {
                Kind::Long => (self.rng.gen_range(3..=5), self.rng.gen_range(3000..3800)),
                Kind::TooLong => (4, self.rng.gen_range(10_100..10_400)),
                Kind::TooShort => (3, self.rng.gen_range(60..170)),
                Kind::FewPassages => (2, self.rng.gen_range(250..900)),
                _ => (self.rng.gen_range(3..=5), self.rng.gen_range(250..1400)),
            }
        };
        let mut out: Vec<String> = (0..passages).map(|_| self.passage(s, total / passages)).collect();
        if kind == Kind::HighOverlap {
            out[0] = format!("{claim}. {}", out[0]);
        }
        out
    }

    fn slots(&mut self, person: (&'static str, &'static str)) -> Slots {
        Slots {
            first: person.0,
            last: person.1,
            place: self.pick(PLACES),
            verb: self.pick(VERBS),
            object: self.pick(OBJECTS),
            year: self.rng.gen_range(1850..2000),
        }
    }

    fn kind(&mut self) -> Kind {
        let x: f64 = self.rng.gen();
        match x {
            x if x < 0.05 => Kind::FewPassages,
            x if x < 0.10 => Kind::TooShort,
            x if x < 0.115 => Kind::TooLong,
            x if x < 0.15 => Kind::HighOverlap,
            x if x < 0.19 => Kind::FewEntities,
            x if x < 0.26 => Kind::Long,
            _ => Kind::Clean,
        }
    }

    /// Difficulty in hundredths, well inside or well outside [0.3, 0.8].
    fn difficulty(&mut self) -> u32 {
        let x: f64 = self.rng.gen();
        if x < 0.12 {
            self.rng.gen_range(2..=28)
        } else if x < 0.25 {
            self.rng.gen_range(82..=98)
        } else {
            self.rng.gen_range(32..=78)
        }
    }

    fn silver(&mut self) -> Silver {
        let x: f64 = self.rng.gen();
        if x < 0.05 {
            Silver::Unparsable
        } else if x < 0.15 {
            Silver::Count(1)
        } else {
            Silver::Count(self.rng.gen_range(2..=5))
        }
    }
}

struct Draft {
    record: ClaimRecord,
    slots: Slots,
    template: usize,
    anonymous: bool,
    difficulty: u32,
    silver: Silver,
}

fn prob_supported(label: Label, difficulty: u32) -> f64 {
    let d = f64::from(difficulty) / 100.0;
    match label {
        Label::Supported => d,
        Label::Refuted => 1.0 - d,
    }
}

pub fn generate(spec: &SynthSpec) -> SynthCorpus {
    let mut g = Gen {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        full: spec.full_evidence,
    };
    let mut people: Vec<(&'static str, &'static str)> =
        FIRST.iter().flat_map(|f| LAST.iter().map(move |l| (*f, *l))).collect();
    people.shuffle(&mut g.rng);
    let mut people = people.into_iter();
    let mut counters: BTreeMap<&str, usize> = BTreeMap::new();
    let mut next_id = |source: &'static str| {
        let c = counters.entry(source).or_default();
        *c += 1;
        format!("{source}-{:04}", *c)
    };

    let mut drafts: Vec<Draft> = Vec::with_capacity(spec.total());
    for _ in 0..spec.base {
        let slots = g.slots(people.next().expect("enough distinct people"));
        let kind = if spec.full_evidence { g.kind() } else { Kind::Clean };
        let template = g.rng.gen_range(0..3);
        let anonymous = kind == Kind::FewEntities;
        let claim = if anonymous {
            slots.render_anonymous()
        } else {
            slots.render(template)
        };
        let source = SOURCES[match g.rng.gen_range(0..10) {
            0..=4 => 0,
            5..=7 => 1,
            _ => 2,
        }];
        let label = if g.rng.gen_bool(0.5) {
            Label::Supported
        } else {
            Label::Refuted
        };
        let evidence = g.evidence(&slots, kind, &claim);
        let mut meta = BTreeMap::new();
        meta.insert("synth_kind".to_string(), kind.name().to_string());
        drafts.push(Draft {
            record: ClaimRecord {
                id: next_id(source),
                claim,
                evidence,
                label: Some(label),
                source: source.to_string(),
                meta,
                silver_question_count: None,
            },
            template,
            anonymous,
            difficulty: g.difficulty(),
            silver: g.silver(),
            slots,
        });
    }

    let named: Vec<usize> = (0..spec.base).filter(|&i| !drafts[i].anonymous).collect();
    for k in 0..spec.lexical_dups + spec.paraphrases {
        let o = named[g.rng.gen_range(0..named.len())];
        let orig = &drafts[o];
        let mut slots = orig.slots.clone();
        let (claim, template, tag) = if k < spec.lexical_dups {
            // Edit the final token so only one shingle changes.
            if orig.template % 3 == 2 {
                let others: Vec<&'static str> = PLACES.iter().copied().filter(|p| *p != slots.place).collect();
                slots.place = g.pick(&others);
            } else {
                slots.year += g.rng.gen_range(1..=5);
            }
            (slots.render(orig.template), orig.template, "near-dup")
        } else {
            let t = (orig.template + g.rng.gen_range(1..3)) % 3;
            (slots.render(t), t, "paraphrase")
        };
        let source: &'static str = SOURCES
            .iter()
            .find(|s| **s == orig.record.source)
            .expect("known source");
        let mut record = orig.record.clone();
        record.id = next_id(source);
        record.claim = claim;
        record
            .meta
            .insert("synth_kind".into(), format!("{tag}-of:{}", orig.record.id));
        let (difficulty, silver) = (orig.difficulty, orig.silver);
        drafts.push(Draft {
            record,
            slots,
            template,
            anonymous: false,
            difficulty,
            silver,
        });
    }

    let mut holdouts = Vec::new();
    let mut targets = named.clone();
    targets.shuffle(&mut g.rng);
    let mut targets = targets.into_iter();
    for i in 0..spec.holdout_exact {
        let d = &drafts[targets.next().expect("enough records")];
        holdouts.push(HoldoutClaim {
            id: format!("holdout-{:03}", i + 1),
            claim: d.record.claim.clone(),
        });
    }
    for i in 0..spec.holdout_paraphrase {
        let d = &drafts[targets.next().expect("enough records")];
        holdouts.push(HoldoutClaim {
            id: format!("holdout-{:03}", spec.holdout_exact + i + 1),
            claim: d.slots.render(d.template + 1),
        });
    }
    for i in 0..spec.holdout_fresh {
        let slots = g.slots(people.next().expect("enough distinct people"));
        let t = g.rng.gen_range(0..3);
        holdouts.push(HoldoutClaim {
            id: format!("holdout-{:03}", spec.holdout_exact + spec.holdout_paraphrase + i + 1),
            claim: slots.render(t),
        });
    }

    let embedder = HashingEmbedder::new(spec.embedding_dim);
    let mut fx = SynthFixtures::default();
    for d in &drafts {
        let r = &d.record;
        let label = r.label.expect("generated records are labeled");
        fx.verifier.insert_text(
            &verifier_request_text(&r.claim, &r.document()),
            json!(prob_supported(label, d.difficulty)),
        );
        let entities: Vec<String> = if d.anonymous {
            Vec::new()
        } else {
            vec![d.slots.person(), d.slots.place.to_string()]
        };
        fx.ner.insert_text(&r.claim, json!({ "entities": entities }));
        fx.embedding.insert_text(&r.claim, json!(embedder.embed_one(&r.claim)));
        let reply = match d.silver {
            Silver::Count(n) => reply_questions(&d.slots.questions(n)),
            Silver::Unparsable => "I cannot break this claim down further.".to_string(),
        };
        fx.judge.insert_text(&silver_prompt(r), json!(reply));
    }
    for h in &holdouts {
        fx.embedding.insert_text(&h.claim, json!(embedder.embed_one(&h.claim)));
    }

    // Sort per source, keeping generation order inside each.
    let mut claims: Vec<ClaimRecord> = Vec::with_capacity(drafts.len());
    for s in SOURCES {
        claims.extend(drafts.iter().filter(|d| d.record.source == s).map(|d| d.record.clone()));
    }
    SynthCorpus {
        claims,
        holdouts,
        fixtures: fx,
    }
}

/// Funnel config for a bundle laid out by [`bundle_files`].
pub fn funnel_config_json(budget: usize, seed: u64) -> String {
    let inputs: Vec<String> = SOURCES.iter().map(|s| format!("claims-{s}.jsonl")).collect();
    let v = json!({
        "inputs": inputs,
        "holdouts": ["holdout.jsonl"],
        "budget": budget,
        "seed": seed,
        "selector": "facility_location",
        "backends": {
            "judge": {"fixtures": "fixtures/judge.jsonl"},
            "embedding": {"fixtures": "fixtures/embedding.jsonl"},
            "verifier": {"fixtures": "fixtures/verifier.jsonl"},
            "ner": {"fixtures": "fixtures/ner.jsonl"}
        }
    });
    let mut s = serde_json::to_string_pretty(&v).expect("static json");
    s.push('\n');
    s
}

fn jsonl<T: Serialize>(rows: &[T]) -> String {
    crate::io::to_jsonl(rows).expect("synthetic rows serialize")
}

/// Every file of a bundle as (relative path, contents).
pub fn bundle_files(corpus: &SynthCorpus, funnel: Option<(usize, u64)>) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for s in SOURCES {
        let rows: Vec<&ClaimRecord> = corpus.claims.iter().filter(|r| r.source == s).collect();
        out.push((format!("claims-{s}.jsonl"), jsonl(&rows)));
    }
    out.push(("holdout.jsonl".into(), jsonl(&corpus.holdouts)));
    let f = &corpus.fixtures;
    for (name, set) in [
        ("judge", &f.judge),
        ("embedding", &f.embedding),
        ("verifier", &f.verifier),
        ("ner", &f.ner),
    ] {
        out.push((format!("fixtures/{name}.jsonl"), set.to_jsonl()));
    }
    if let Some((budget, seed)) = funnel {
        out.push(("funnel.json".into(), funnel_config_json(budget, seed)));
    }
    out
}

pub const FUNNEL_200_DIR: &str = "synth200";
pub const DEDUP_500_DIR: &str = "synth500";
pub const FUNNEL_200_BUDGET: usize = 40;
pub const FUNNEL_200_SEED: u64 = 7;

/// Every bundled data set: (directory name, files).
pub fn bundled() -> Vec<(&'static str, Vec<(String, String)>)> {
    vec![
        (
            FUNNEL_200_DIR,
            bundle_files(
                &generate(&SynthSpec::funnel_200()),
                Some((FUNNEL_200_BUDGET, FUNNEL_200_SEED)),
            ),
        ),
        (DEDUP_500_DIR, bundle_files(&generate(&SynthSpec::dedup_500()), None)),
        (super::scoring::SCORING_DIR, super::scoring::bundle_files()),
    ]
}
