use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use claimrl::corpus::Label;
use claimrl::rewards::{group_advantages, pseudo_label, GroupScore, RewardRecord};
use claimrl::trace::parse_trace;
use serde_json::Value;

fn data(rel: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data").join(rel)
}

fn claimrl(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_claimrl"))
        .args(args)
        .env_remove("CLAIMRL_JUDGE_URL")
        .env_remove("CLAIMRL_EMBED_URL")
        .env_remove("CLAIMRL_VERIFIER_URL")
        .env_remove("CLAIMRL_NER_URL")
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stderr_json(o: &Output) -> Value {
    let text = String::from_utf8_lossy(&o.stderr);
    assert_eq!(text.trim_end().lines().count(), 1, "stderr: {text}");
    serde_json::from_str(text.trim()).expect("stderr is one JSON line")
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn score_labeled_happy_path() {
    let o = claimrl(&[
        "score",
        "--traces",
        s(&data("scoring/traces.jsonl")),
        "--claims",
        s(&data("scoring/claims.jsonl")),
        "--mode",
        "labeled",
        "--fixtures",
        s(&data("scoring/judge.jsonl")),
    ]);
    let out = stdout(&o);
    let rows: Vec<RewardRecord> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(rows.len(), 4);
    for r in &rows {
        assert_eq!(r.mode, "labeled");
        assert!(r.breakdown.violations().is_empty(), "{r:?}");
    }
}

#[test]
fn score_is_deterministic_across_workers_with_warm_cache() {
    let tmp = tempfile::tempdir().unwrap();
    let cache = tmp.path().join("cache");
    let mut outs = Vec::new();
    for (i, workers) in ["1", "4", "4"].iter().enumerate() {
        let out = tmp.path().join(format!("r{i}.jsonl"));
        let o = claimrl(&[
            "--workers",
            workers,
            "--cache-dir",
            s(&cache),
            "score",
            "--traces",
            s(&data("scoring/groups.jsonl")),
            "--claims",
            s(&data("scoring/claims.jsonl")),
            "--mode",
            "unlabeled",
            "--fixtures",
            s(&data("scoring/judge.jsonl")),
            "--out",
            s(&out),
        ]);
        stdout(&o);
        outs.push(std::fs::read(out).unwrap());
    }
    assert_eq!(outs[0], outs[1]);
    assert_eq!(outs[1], outs[2]);
    assert!(cache.read_dir().unwrap().next().is_some());
}

#[test]
fn score_group_matches_rewards_oracle() {
    let o = claimrl(&[
        "score-group",
        "--traces",
        s(&data("scoring/groups.jsonl")),
        "--claims",
        s(&data("scoring/claims.jsonl")),
        "--group-size",
        "8",
        "--supervision",
        "0.5",
        "--fixtures",
        s(&data("scoring/judge.jsonl")),
    ]);
    let groups: Vec<GroupScore> = stdout(&o).lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(groups.len(), 4);
    let rows: Vec<Value> = std::fs::read_to_string(data("scoring/groups.jsonl"))
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    for g in &groups {
        let traces: Vec<&str> = rows
            .iter()
            .filter(|r| r["id"] == g.id.as_str())
            .map(|r| r["trace"].as_str().unwrap())
            .collect();
        let verdicts: Vec<Option<Label>> = traces.iter().map(|t| parse_trace(t).verdict()).collect();
        assert_eq!(g.verdicts, verdicts);
        assert_eq!(g.pseudo_label, pseudo_label(&verdicts));
        let totals: Vec<f64> = g.breakdowns.iter().map(|b| b.total).collect();
        assert_eq!(g.advantages, group_advantages(&totals));
        let mean = g.advantages.iter().sum::<f64>() / 8.0;
        assert!(mean.abs() <= 1e-12);
    }
}

#[test]
fn score_group_rejects_wrong_group_size() {
    let o = claimrl(&[
        "score-group",
        "--traces",
        s(&data("scoring/groups.jsonl")),
        "--claims",
        s(&data("scoring/claims.jsonl")),
        "--group-size",
        "4",
        "--fixtures",
        s(&data("scoring/judge.jsonl")),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["stage"], "score-group");
}

#[test]
fn eval_perfect_predictions() {
    let preds = s(&data("scoring/preds-perfect.jsonl")).to_string();
    let gold = s(&data("scoring/claims.jsonl")).to_string();
    let o = claimrl(&["eval", "--preds", &preds, "--gold", &gold]);
    assert_eq!(stdout(&o), "1.0000\n");
    let o = claimrl(&["eval", "--preds", &preds, "--gold", &gold, "--json"]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["balanced_accuracy"], 1.0);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["--bogus"][..],
        &["frobnicate"],
        &["score", "--mode", "labeled"],
        &["eval"],
    ] {
        let o = claimrl(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(stderr_json(&o)["error"], "usage");
    }
    let o = claimrl(&["--help"]);
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn runtime_errors_exit_one_with_stage() {
    let o = claimrl(&[
        "eval",
        "--preds",
        "/nonexistent/p.jsonl",
        "--gold",
        "/nonexistent/g.jsonl",
    ]);
    assert_eq!(o.status.code(), Some(1));
    let v = stderr_json(&o);
    assert_eq!(v["error"], "failed");
    assert_eq!(v["stage"], "eval");
}

#[test]
fn funnel_run_report_and_env_override() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("out");
    let config = data("synth200/funnel.json");
    let o = claimrl(&["funnel", "run", "--config", s(&config), "--out", s(&out)]);
    let summary: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(summary["records"], 43);

    let report = out.join("report.json");
    let table = stdout(&claimrl(&["funnel", "report", "--report", s(&report)]));
    assert!(table.starts_with("stage"));
    assert_eq!(table.lines().count(), 10);
    let json = stdout(&claimrl(&[
        "funnel",
        "report",
        "--report",
        s(&report),
        "--format",
        "json",
    ]));
    let parsed: Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["stages"].as_array().unwrap().len(), 9);

    // An endpoint from the environment replaces the configured fixtures.
    let o = Command::new(env!("CARGO_BIN_EXE_claimrl"))
        .args([
            "funnel",
            "run",
            "--config",
            s(&config),
            "--out",
            s(&tmp.path().join("env")),
        ])
        .env("CLAIMRL_VERIFIER_URL", "http://127.0.0.1:9/verify")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stderr_json(&o)["stage"], "difficulty");
    assert!(!tmp.path().join("env").exists());
}

#[test]
fn every_subcommand_honors_dry_run() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o_path = s(&out).to_string();
    let claims = s(&data("synth500/claims-wiki.jsonl")).to_string();
    let holdouts = s(&data("synth500/holdout.jsonl")).to_string();
    let sc = |f: &str| s(&data(&format!("scoring/{f}"))).to_string();
    let runs: Vec<Vec<String>> = vec![
        vec![
            "funnel".into(),
            "run".into(),
            "--config".into(),
            s(&data("synth200/funnel.json")).into(),
            "--out".into(),
            o_path.clone(),
        ],
        vec![
            "dedup".into(),
            "--input".into(),
            claims.clone(),
            "--out".into(),
            o_path.clone(),
        ],
        vec![
            "decontaminate".into(),
            "--input".into(),
            claims.clone(),
            "--holdouts".into(),
            holdouts,
            "--out".into(),
            o_path.clone(),
        ],
        vec![
            "select".into(),
            "--input".into(),
            claims,
            "--budget".into(),
            "10".into(),
            "--out".into(),
            o_path.clone(),
            "--diagnostics".into(),
            o_path.clone(),
        ],
        vec![
            "score".into(),
            "--traces".into(),
            sc("traces.jsonl"),
            "--claims".into(),
            sc("claims.jsonl"),
            "--mode".into(),
            "labeled".into(),
            "--fixtures".into(),
            sc("judge.jsonl"),
            "--out".into(),
            o_path.clone(),
        ],
        vec![
            "score-group".into(),
            "--traces".into(),
            sc("groups.jsonl"),
            "--claims".into(),
            sc("claims.jsonl"),
            "--fixtures".into(),
            sc("judge.jsonl"),
            "--out".into(),
            o_path.clone(),
        ],
    ];
    let cache = tmp.path().join("cache");
    for args in runs {
        let mut full = vec!["--dry-run".to_string(), "--cache-dir".into(), s(&cache).into()];
        full.extend(args.iter().cloned());
        let refs: Vec<&str> = full.iter().map(String::as_str).collect();
        let o = claimrl(&refs);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(!out.exists(), "{args:?} wrote output");
        assert!(!cache.exists(), "{args:?} touched the cache");
    }
}

#[test]
fn dedup_decontaminate_select_chain() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path().join("d.jsonl");
    let e = tmp.path().join("e.jsonl");
    let sel = tmp.path().join("s.jsonl");
    let diag = tmp.path().join("diag.json");
    let emb = s(&data("synth500/fixtures/embedding.jsonl")).to_string();
    let inputs: Vec<String> = ["wiki", "news", "sci"]
        .iter()
        .map(|x| s(&data(&format!("synth500/claims-{x}.jsonl"))).to_string())
        .collect();
    let mut args = vec!["dedup", "--embed-fixtures", &emb, "--out", s(&d), "--input"];
    args.extend(inputs.iter().map(String::as_str));
    let v: Value = serde_json::from_str(&stdout(&claimrl(&args))).unwrap();
    assert_eq!(v["input"], 500);
    let holdouts = s(&data("synth500/holdout.jsonl")).to_string();
    let o = claimrl(&[
        "decontaminate",
        "--input",
        s(&d),
        "--holdouts",
        &holdouts,
        "--embed-fixtures",
        &emb,
        "--out",
        s(&e),
    ]);
    let v: Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert!(v["output"].as_u64().unwrap() < v["input"].as_u64().unwrap());
    let o = claimrl(&[
        "select",
        "--input",
        s(&e),
        "--budget",
        "30",
        "--selector",
        "farthest-point",
        "--embed-fixtures",
        &emb,
        "--out",
        s(&sel),
        "--diagnostics",
        s(&diag),
    ]);
    stdout(&o);
    assert_eq!(std::fs::read_to_string(&sel).unwrap().lines().count(), 30);
    let diag: Value = serde_json::from_str(&std::fs::read_to_string(&diag).unwrap()).unwrap();
    assert!(diag["d_med"].as_f64().unwrap() >= 0.0);
}
