use std::sync::Arc;

use super::*;
use crate::backends::{FnEmbedder, FnVerifier, HashingEmbedder};
use crate::corpus::{CapitalizedSpanNer, Label};
use crate::synth::scripted::{reply_questions, scripted_judge, JudgeCall};

fn rec(id: &str, claim: &str) -> ClaimRecord {
    ClaimRecord {
        id: id.into(),
        claim: claim.into(),
        evidence: vec!["e".into()],
        label: Some(Label::Supported),
        source: "s".into(),
        meta: Default::default(),
        silver_question_count: None,
    }
}

fn hashing() -> Embedder {
    Embedder::new(Arc::new(HashingEmbedder::new(64)))
}

#[test]
fn minhash_dedup_examples() {
    let t = Thresholds::default();
    let h = MinHasher::default();
    let records = vec![
        rec("a", "the river flows north through the old city"),
        rec("b", "the river flows north through the old city"),
        rec("c", "completely different words about mountain climbing"),
    ];
    let out = dedup_minhash(records, &t, &h);
    let kept: Vec<&str> = out.kept.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(kept, vec!["a", "c"]);
    assert_eq!(
        out.rejected,
        vec![Rejection {
            id: "b".into(),
            reason: "near-duplicate-minhash".into()
        }]
    );
    let again = dedup_minhash(out.kept.clone(), &t, &h);
    assert_eq!(again.kept, out.kept);
}

#[test]
fn semantic_dedup_examples() {
    let table = [
        ("x", vec![1.0, 0.0]),
        ("y", vec![0.95, (1.0f64 - 0.95 * 0.95).sqrt()]),
        ("z", vec![0.65, (1.0f64 - 0.65 * 0.65).sqrt()]),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    let e = Embedder::new(Arc::new(FnEmbedder::table("t", table)));
    let t = Thresholds::default();
    let out = dedup_semantic(vec![rec("1", "x"), rec("2", "y"), rec("3", "z")], &t, &e).unwrap();
    let kept: Vec<&str> = out.kept.iter().map(|r| r.id.as_str()).collect();
    assert_eq!(kept, vec!["1", "3"]);
    let again = dedup_semantic(out.kept.clone(), &t, &e).unwrap();
    assert_eq!(again.kept, out.kept);

    let err = dedup_semantic(vec![rec("4", "unknown")], &t, &e).unwrap_err();
    assert_eq!(err.stage_name(), Some("semantic-dedup"));
}

#[test]
fn decontaminate_examples() {
    let t = Thresholds::default();
    let h = MinHasher::default();
    let e = hashing();
    let records = vec![
        rec("a", "Paris is the capital of France and its largest city"),
        rec("b", "Volcanic soil near Naples supports vineyards"),
    ];
    let holdout = vec!["Paris is the capital of France and its largest city".to_string()];
    let out = decontaminate(records.clone(), &holdout, &t, &e, &h).unwrap();
    assert_eq!(out.kept.len(), 1);
    assert_eq!(out.kept[0].id, "b");
    assert_eq!(out.rejected[0].reason, "holdout-minhash");
    let again = decontaminate(out.kept.clone(), &holdout, &t, &e, &h).unwrap();
    assert_eq!(again.kept, out.kept);

    let through = decontaminate(records.clone(), &[], &t, &e, &h).unwrap();
    assert_eq!(through.kept, records);
}

#[test]
fn derived_seeds_differ_by_stage_and_seed() {
    assert_ne!(derive_seed(1, "minhash"), derive_seed(1, "select"));
    assert_ne!(derive_seed(1, "minhash"), derive_seed(2, "minhash"));
    assert_eq!(derive_seed(7, "minhash"), derive_seed(7, "minhash"));
}

fn long_record(i: usize, label: Label, source: &str, words: usize) -> ClaimRecord {
    let names = [
        "Alice Moreau",
        "Bruno Tanaka",
        "Chiara Lindqvist",
        "Dmitri Osei",
        "Elena Fairbanks",
        "Farid Nakamura",
    ];
    let places = ["Oslo", "Lagos", "Quito", "Perth", "Hanoi", "Tunis"];
    let a = names[i % names.len()];
    let b = places[(i / names.len()) % places.len()];
    let claim = format!(
        "{a} opened a bakery in {b} during year {} with {} ovens",
        1900 + i,
        i * 3 + 1
    );
    let filler: Vec<String> = (0..words).map(|w| format!("w{}x{}", i, w % 97)).collect();
    let chunk = filler.join(" ");
    ClaimRecord {
        id: format!("{source}-{i:03}"),
        claim,
        evidence: vec![chunk.clone(), chunk.clone(), chunk],
        label: Some(label),
        source: source.into(),
        meta: Default::default(),
        silver_question_count: None,
    }
}

#[test]
fn small_end_to_end_chain() {
    let mut records = Vec::new();
    for i in 0..24 {
        let label = if i % 2 == 0 { Label::Supported } else { Label::Refuted };
        let words = if i == 5 { 1100 } else { 100 };
        records.push(long_record(i, label, if i % 3 == 0 { "alpha" } else { "beta" }, words));
    }
    records.push(ClaimRecord {
        evidence: vec!["short".into()],
        ..long_record(99, Label::Supported, "alpha", 1)
    });
    let judge = Judge::new(Arc::new(scripted_judge("silver", |c| match c {
        JudgeCall::SilverDecompose { .. } => reply_questions(&["Who?".into(), "Where?".into()]),
        _ => String::new(),
    })));
    let embedder = hashing();
    let verifier = FnVerifier::new("mid", |_, _| Ok(0.5));
    let ner = CapitalizedSpanNer;
    let backends = StageBackends {
        judge: &judge,
        embedder: &embedder,
        verifier: &verifier,
        ner: &ner,
    };
    let cfg = FunnelConfig {
        inputs: vec![PathBuf::from("unused")],
        holdouts: vec![],
        thresholds: Thresholds {
            semantic_cosine: 0.99,
            ..Thresholds::default()
        },
        budget: 6,
        seed: 3,
        backends: BackendsConfig::default(),
        selector: Selector::FacilityLocation,
        cache_dir: None,
        output_dir: None,
        labels: Default::default(),
    };
    let n = records.len();
    let ingested = StageOutcome {
        kept: records,
        rejected: vec![],
    };
    let out = run_stages(ingested, n, &[], &cfg, backends).unwrap();
    let names: Vec<&str> = out.report.stages.iter().map(|s| s.name.as_str()).collect();
    assert_eq!(names, STAGES.to_vec());
    for w in out.report.stages.windows(2) {
        assert_eq!(w[1].input, w[0].output);
    }
    for s in &out.report.stages {
        assert_eq!(s.output + s.rejected_total(), s.input + s.added);
    }
    let rule = &out.report.stages[1];
    assert_eq!(rule.rejected.get("too-few-passages"), Some(&1));
    let select = &out.report.stages[7];
    assert_eq!(select.output, 6);
    // Record 5 has 3300 evidence tokens, so augmentation adds it unless selected.
    let augment = &out.report.stages[8];
    assert_eq!(augment.output, out.records.len());
    assert!(out.records.iter().any(|r| r.id == "beta-005"));
    assert!(out.records.iter().all(|r| r.silver_question_count == Some(2)));

    let again = run_stages(
        StageOutcome {
            kept: out.records.clone(),
            rejected: vec![],
        },
        out.records.len(),
        &[],
        &FunnelConfig {
            budget: out.records.len(),
            ..cfg.clone()
        },
        backends,
    )
    .unwrap();
    assert_eq!(again.records, out.records);
}
