//! `claimrl`: curation funnel and reward scoring from the command line.
//!
//! Exit codes: 0 on success, 1 when a stage or backend fails, 2 on a usage
//! error. Failures print one JSON line on stderr.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Display;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::json;

use claimrl::backends::{DiskCache, Embedder, Judge};
use claimrl::corpus::{ingest_claims, ClaimRecord, Label, LabelMap};
use claimrl::funnel::{
    self, allocate_budgets, build_embedder, build_judge, decontaminate, dedup_minhash, dedup_semantic, derive_seed,
    ingest, read_holdout_claims, select, BackendSpec, Backends, FunnelConfig, FunnelError, FunnelReport, MinHasher,
    Selector, StageOutcome, Thresholds,
};
use claimrl::metrics::{self, ConfusionCounts};
use claimrl::rewards::{
    partition_supervision, pseudo_label, score_group, total_reward, Partition, RewardBackends, RewardRecord,
    SupervisionMode,
};
use claimrl::{io, par, parse_trace};

const JUDGE_URL_ENV: &str = "CLAIMRL_JUDGE_URL";
const EMBED_URL_ENV: &str = "CLAIMRL_EMBED_URL";
const VERIFIER_URL_ENV: &str = "CLAIMRL_VERIFIER_URL";
const NER_URL_ENV: &str = "CLAIMRL_NER_URL";

#[derive(Parser)]
#[command(
    name = "claimrl",
    version,
    about = "Claim-verification reward scoring and corpus curation"
)]
struct Cli {
    /// Master seed; every stage seed is derived from it.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads. 1 runs everything on the calling thread.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    workers: Option<u64>,
    /// Response cache for judge, embedding and verifier calls.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
    /// Validate inputs, config and backends; write nothing.
    #[arg(long, global = true)]
    dry_run: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// The full curation funnel.
    #[command(subcommand)]
    Funnel(FunnelCommand),
    /// MinHash then semantic near-duplicate removal.
    Dedup(DedupArgs),
    /// Drop claims that collide with held-out evaluation claims.
    Decontaminate(DecontamArgs),
    /// Budgeted per-cell selection.
    Select(SelectArgs),
    /// Score traces into rewards JSONL.
    Score(ScoreArgs),
    /// Score rollout groups: breakdowns, pseudo-labels and advantages.
    ScoreGroup(ScoreGroupArgs),
    /// Balanced accuracy of predictions against gold labels.
    Eval(EvalArgs),
}

#[derive(Subcommand)]
enum FunnelCommand {
    Run(FunnelRunArgs),
    Report(FunnelReportArgs),
}

#[derive(Args)]
struct FunnelRunArgs {
    #[arg(long)]
    config: PathBuf,
    /// Output directory; defaults to the config's output_dir.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    judge_url: Option<String>,
    #[arg(long)]
    embed_url: Option<String>,
    #[arg(long)]
    verifier_url: Option<String>,
    #[arg(long)]
    ner_url: Option<String>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ReportFormat {
    Table,
    Json,
}

#[derive(Args)]
struct FunnelReportArgs {
    #[arg(long)]
    report: PathBuf,
    #[arg(long, value_enum, default_value = "table")]
    format: ReportFormat,
}

/// Embedding backend; the builtin hashing embedder when nothing is given.
#[derive(Args)]
struct EmbedArgs {
    #[arg(long)]
    embed_fixtures: Option<PathBuf>,
    #[arg(long)]
    embed_url: Option<String>,
    #[arg(long)]
    embed_builtin: Option<String>,
    #[arg(long)]
    embed_dim: Option<usize>,
}

#[derive(Args)]
struct DedupArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = Thresholds::default().minhash_jaccard)]
    jaccard: f64,
    #[arg(long, default_value_t = Thresholds::default().semantic_cosine)]
    cosine: f64,
    #[command(flatten)]
    embed: EmbedArgs,
}

#[derive(Args)]
struct DecontamArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    holdouts: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = Thresholds::default().decontam_jaccard)]
    jaccard: f64,
    #[arg(long, default_value_t = Thresholds::default().decontam_cosine)]
    cosine: f64,
    #[command(flatten)]
    embed: EmbedArgs,
}

#[derive(Clone, Copy, ValueEnum)]
enum SelectorArg {
    FacilityLocation,
    FarthestPoint,
    Random,
}

impl From<SelectorArg> for Selector {
    fn from(s: SelectorArg) -> Self {
        match s {
            SelectorArg::FacilityLocation => Selector::FacilityLocation,
            SelectorArg::FarthestPoint => Selector::FarthestPoint,
            SelectorArg::Random => Selector::Random,
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long, required = true, num_args = 1..)]
    input: Vec<PathBuf>,
    #[arg(long)]
    budget: usize,
    #[arg(long, value_enum, default_value = "facility-location")]
    selector: SelectorArg,
    #[arg(long)]
    out: PathBuf,
    /// Also write coverage diagnostics JSON here.
    #[arg(long)]
    diagnostics: Option<PathBuf>,
    /// Diagnostics subsample size; defaults to the pool, capped at 3000.
    #[arg(long)]
    sample_size: Option<usize>,
    #[command(flatten)]
    embed: EmbedArgs,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ModeArg {
    Labeled,
    Unlabeled,
}

#[derive(Args)]
struct JudgeArgs {
    /// Recorded judge responses.
    #[arg(long)]
    fixtures: Option<PathBuf>,
    #[arg(long)]
    judge_url: Option<String>,
}

#[derive(Args)]
struct ScoreArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    claims: PathBuf,
    #[arg(long, value_enum)]
    mode: ModeArg,
    #[command(flatten)]
    judge: JudgeArgs,
    #[command(flatten)]
    embed: EmbedArgs,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ScoreGroupArgs {
    #[arg(long)]
    traces: PathBuf,
    #[arg(long)]
    claims: PathBuf,
    /// Fraction of claims scored against their gold label.
    #[arg(long, default_value_t = 1.0)]
    supervision: f64,
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(1..))]
    group_size: u64,
    #[command(flatten)]
    judge: JudgeArgs,
    #[command(flatten)]
    embed: EmbedArgs,
    /// Defaults to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    preds: PathBuf,
    /// Claims file carrying the gold labels.
    #[arg(long)]
    gold: PathBuf,
    /// Print the confusion counts as JSON instead of the bare score.
    #[arg(long)]
    json: bool,
}

#[derive(Debug)]
struct Failure {
    stage: String,
    message: String,
}

impl Failure {
    fn new(stage: &str, message: impl Display) -> Self {
        Self {
            stage: stage.to_string(),
            message: message.to_string(),
        }
    }
}

impl From<FunnelError> for Failure {
    fn from(e: FunnelError) -> Self {
        let stage = match &e {
            FunnelError::Stage { stage, .. } => stage,
            FunnelError::Config(_) => "config",
            FunnelError::Io(_) => "io",
        };
        let message = match &e {
            FunnelError::Stage { message, .. } => message.clone(),
            other => other.to_string(),
        };
        Self {
            stage: stage.to_string(),
            message,
        }
    }
}

type Result<T> = std::result::Result<T, Failure>;

struct Globals {
    seed: Option<u64>,
    cache_dir: Option<PathBuf>,
    dry_run: bool,
}

impl Globals {
    fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    fn cache(&self) -> Option<DiskCache> {
        self.cache_dir.as_ref().map(DiskCache::new)
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            let text = e.to_string();
            let first = text.lines().next().unwrap_or("").trim_start_matches("error: ");
            eprintln!("{}", json!({"error": "usage", "message": first}));
            return ExitCode::from(2);
        }
    };
    if let Some(w) = cli.workers {
        par::init_workers(w as usize);
        par::set_sequential(w == 1);
    }
    let g = Globals {
        seed: cli.seed,
        cache_dir: cli.cache_dir,
        dry_run: cli.dry_run,
    };
    let result = match cli.command {
        Command::Funnel(FunnelCommand::Run(a)) => funnel_run(&g, a),
        Command::Funnel(FunnelCommand::Report(a)) => funnel_report(&a),
        Command::Dedup(a) => dedup(&g, a),
        Command::Decontaminate(a) => decontam(&g, a),
        Command::Select(a) => select_cmd(&g, a),
        Command::Score(a) => score(&g, a),
        Command::ScoreGroup(a) => score_group_cmd(&g, a),
        Command::Eval(a) => eval(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", json!({"error": "failed", "stage": f.stage, "message": f.message}));
            ExitCode::from(1)
        }
    }
}

/// An explicit flag wins over the environment variable.
fn url_override(flag: Option<String>, env: &str) -> Option<String> {
    flag.or_else(|| std::env::var(env).ok().filter(|v| !v.is_empty()))
}

fn funnel_run(g: &Globals, a: FunnelRunArgs) -> Result<()> {
    let mut cfg = FunnelConfig::load(&a.config)?;
    if let Some(s) = g.seed {
        cfg.seed = s;
    }
    if let Some(d) = &g.cache_dir {
        cfg.cache_dir = Some(d.clone());
    }
    let b = &mut cfg.backends;
    for (flag, env, spec) in [
        (a.judge_url, JUDGE_URL_ENV, &mut b.judge),
        (a.embed_url, EMBED_URL_ENV, &mut b.embedding),
        (a.verifier_url, VERIFIER_URL_ENV, &mut b.verifier),
        (a.ner_url, NER_URL_ENV, &mut b.ner),
    ] {
        if let Some(u) = url_override(flag, env) {
            let id = spec.id.clone();
            *spec = BackendSpec {
                id,
                ..BackendSpec::url(u)
            };
        }
    }
    cfg.validate()?;
    let out_dir = a
        .out
        .or_else(|| cfg.output_dir.clone())
        .ok_or_else(|| Failure::new("config", "no output directory: pass --out or set output_dir"))?;
    let backends = Backends::build(&cfg.backends, cfg.cache_dir.as_deref())?;
    if g.dry_run {
        let ingested = ingest(&cfg.inputs, &cfg.label_map())?;
        let holdouts = read_holdout_claims(&cfg.holdouts)?;
        println!(
            "{}",
            json!({"dry_run": true, "records": ingested.kept.len(), "holdouts": holdouts.len(), "out": out_dir})
        );
        return Ok(());
    }
    let out = funnel::run_funnel(&cfg, (&backends).into())?;
    let (curated, report) = funnel::write_outputs(&out_dir, &out)?;
    println!(
        "{}",
        json!({"records": out.records.len(), "curated": curated, "report": report})
    );
    Ok(())
}

fn funnel_report(a: &FunnelReportArgs) -> Result<()> {
    let text = std::fs::read_to_string(&a.report)
        .map_err(|e| Failure::new("report", format!("{}: {e}", a.report.display())))?;
    let report: FunnelReport = serde_json::from_str(&text).map_err(|e| Failure::new("report", e))?;
    let rendered = metrics::stage_report_render(&report).map_err(|e| Failure::new("report", e))?;
    match a.format {
        ReportFormat::Table => print!("{}", rendered.table),
        ReportFormat::Json => print!("{}", rendered.json),
    }
    Ok(())
}

fn embed_spec(a: &EmbedArgs) -> BackendSpec {
    let url = url_override(a.embed_url.clone(), EMBED_URL_ENV)
        .filter(|_| a.embed_fixtures.is_none() && a.embed_builtin.is_none());
    let mut spec = BackendSpec {
        fixtures: a.embed_fixtures.clone(),
        url,
        builtin: a.embed_builtin.clone(),
        id: None,
        dim: a.embed_dim,
    };
    if spec.fixtures.is_none() && spec.url.is_none() && spec.builtin.is_none() {
        spec.builtin = Some("hashing".into());
    }
    spec
}

fn embedder(g: &Globals, a: &EmbedArgs) -> Result<Embedder> {
    Ok(build_embedder(&embed_spec(a), g.cache().as_ref())?)
}

fn judge(g: &Globals, a: &JudgeArgs) -> Result<Judge> {
    let url = url_override(a.judge_url.clone(), JUDGE_URL_ENV).filter(|_| a.fixtures.is_none());
    let spec = BackendSpec {
        fixtures: a.fixtures.clone(),
        url,
        builtin: None,
        id: None,
        dim: None,
    };
    Ok(build_judge(&spec, g.cache().as_ref())?)
}

fn read_claims(paths: &[PathBuf]) -> Result<Vec<ClaimRecord>> {
    Ok(ingest(paths, &LabelMap::default())?.kept)
}

fn write_records(g: &Globals, path: &Path, records: &[impl Serialize]) -> Result<()> {
    if g.dry_run {
        return Ok(());
    }
    io::write_jsonl_atomic(path, records).map_err(|e| Failure::new("io", e))
}

fn summary(stage: &str, input: usize, outcome: &StageOutcome, dry_run: bool) -> serde_json::Value {
    json!({
        "stage": stage,
        "input": input,
        "output": outcome.kept.len(),
        "rejected": outcome.histogram(),
        "dry_run": dry_run,
    })
}

fn thresholds(jaccard: f64, cosine: f64) -> Result<Thresholds> {
    for (name, v) in [("jaccard", jaccard), ("cosine", cosine)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(Failure::new(
                "config",
                format!("{name} threshold must be in [0, 1], got {v}"),
            ));
        }
    }
    Ok(Thresholds {
        minhash_jaccard: jaccard,
        semantic_cosine: cosine,
        decontam_jaccard: jaccard,
        decontam_cosine: cosine,
        ..Thresholds::default()
    })
}

fn dedup(g: &Globals, a: DedupArgs) -> Result<()> {
    let t = thresholds(a.jaccard, a.cosine)?;
    let embedder = embedder(g, &a.embed)?;
    let records = read_claims(&a.input)?;
    let n = records.len();
    let hasher = MinHasher::new(derive_seed(g.seed(), "minhash"));
    let lexical = dedup_minhash(records, &t, &hasher);
    let mut outcome = dedup_semantic(lexical.kept, &t, &embedder)?;
    outcome.rejected.splice(0..0, lexical.rejected);
    write_records(g, &a.out, &outcome.kept)?;
    println!("{}", summary("dedup", n, &outcome, g.dry_run));
    Ok(())
}

fn decontam(g: &Globals, a: DecontamArgs) -> Result<()> {
    let t = thresholds(a.jaccard, a.cosine)?;
    let embedder = embedder(g, &a.embed)?;
    let records = read_claims(&a.input)?;
    let holdouts = read_holdout_claims(&a.holdouts)?;
    let n = records.len();
    let hasher = MinHasher::new(derive_seed(g.seed(), "minhash"));
    let outcome = decontaminate(records, &holdouts, &t, &embedder, &hasher)?;
    write_records(g, &a.out, &outcome.kept)?;
    println!("{}", summary("decontaminate", n, &outcome, g.dry_run));
    Ok(())
}

fn select_cmd(g: &Globals, a: SelectArgs) -> Result<()> {
    let embedder = embedder(g, &a.embed)?;
    let pool = read_claims(&a.input)?;
    let budget = allocate_budgets(&pool, a.budget).map_err(|e| Failure::new("select", e))?;
    if let Some(m) = a.sample_size {
        if m > pool.len() {
            return Err(Failure::new(
                "select",
                format!("sample size {m} exceeds pool of {}", pool.len()),
            ));
        }
    }
    if g.dry_run {
        println!("{}", json!({"dry_run": true, "pool": pool.len(), "budget": budget}));
        return Ok(());
    }
    let claims: Vec<&str> = pool.iter().map(|r| r.claim.as_str()).collect();
    let vecs = embedder.embed(&claims).map_err(|e| Failure::new("select", e))?;
    let refs: Vec<&[f64]> = vecs.iter().map(|v| v.as_slice()).collect();
    let seed = g.seed();
    let chosen = select::select_pool(&pool, &refs, &budget, a.selector.into(), |label, source| {
        derive_seed(seed, &format!("select/{label}/{source}"))
    })
    .map_err(|e| Failure::new("select", e))?;
    let diagnostics = match &a.diagnostics {
        Some(path) => {
            let m = a.sample_size.unwrap_or(pool.len().min(metrics::MAX_DIAGNOSTIC_SAMPLE));
            let d = metrics::selection_diagnostics(&refs, &chosen, m, derive_seed(seed, "diagnostics"))
                .map_err(|e| Failure::new("select", e))?;
            let mut text = serde_json::to_string_pretty(&d).map_err(|e| Failure::new("io", e))?;
            text.push('\n');
            io::write_atomic(path, text.as_bytes()).map_err(|e| Failure::new("io", e))?;
            Some(d)
        }
        None => None,
    };
    let selected: Vec<&ClaimRecord> = chosen.iter().map(|&i| &pool[i]).collect();
    write_records(g, &a.out, &selected)?;
    println!(
        "{}",
        json!({"stage": "select", "input": pool.len(), "output": selected.len(), "budget": budget, "diagnostics": diagnostics})
    );
    Ok(())
}

#[derive(Deserialize)]
struct TraceRow {
    id: String,
    trace: String,
}

fn read_rows<T: serde::de::DeserializeOwned>(stage: &str, path: &Path) -> Result<Vec<T>> {
    io::read_jsonl(path).map_err(|e| Failure::new(stage, e))
}

fn claims_by_id(stage: &str, path: &Path) -> Result<HashMap<String, ClaimRecord>> {
    let records = ingest_claims(path, &LabelMap::default()).map_err(|e| Failure::new(stage, e))?;
    Ok(records.into_iter().map(|r| (r.id.clone(), r)).collect())
}

fn lookup<'a>(stage: &str, claims: &'a HashMap<String, ClaimRecord>, id: &str) -> Result<&'a ClaimRecord> {
    claims
        .get(id)
        .ok_or_else(|| Failure::new(stage, format!("no claim with id {id:?}")))
}

fn emit(g: &Globals, out: Option<&Path>, rows: &[impl Serialize]) -> Result<()> {
    match out {
        Some(p) => write_records(g, p, rows),
        None if g.dry_run => Ok(()),
        None => {
            print!("{}", io::to_jsonl(rows).map_err(|e| Failure::new("io", e))?);
            Ok(())
        }
    }
}

fn score(g: &Globals, a: ScoreArgs) -> Result<()> {
    let judge = judge(g, &a.judge)?;
    let embedder = embedder(g, &a.embed)?;
    let rows: Vec<TraceRow> = read_rows("score", &a.traces)?;
    let claims = claims_by_id("score", &a.claims)?;
    let mut modes = Vec::with_capacity(rows.len());
    let mut verdicts: BTreeMap<&str, Vec<Option<Label>>> = BTreeMap::new();
    if a.mode == ModeArg::Unlabeled {
        for r in &rows {
            verdicts.entry(&r.id).or_default().push(parse_trace(&r.trace).verdict());
        }
    }
    for r in &rows {
        let rec = lookup("score", &claims, &r.id)?;
        if rec.silver_question_count.is_none() {
            return Err(Failure::new(
                "score",
                format!("claim {:?} has no silver_question_count", rec.id),
            ));
        }
        modes.push(match a.mode {
            ModeArg::Labeled => SupervisionMode::Labeled(
                rec.label
                    .ok_or_else(|| Failure::new("score", format!("claim {:?} has no gold label", rec.id)))?,
            ),
            ModeArg::Unlabeled => SupervisionMode::Unlabeled(pseudo_label(&verdicts[r.id.as_str()])),
        });
    }
    if g.dry_run {
        println!("{}", json!({"dry_run": true, "traces": rows.len()}));
        return Ok(());
    }
    let backends = RewardBackends {
        judge: &judge,
        embedder: &embedder,
    };
    let indexed: Vec<usize> = (0..rows.len()).collect();
    let records = par::try_map(&indexed, |&i| {
        let r = &rows[i];
        let rec = &claims[&r.id];
        total_reward(rec, &r.trace, modes[i], backends).map(|b| RewardRecord::new(&r.id, modes[i], b))
    })
    .map_err(|e| Failure::new("score", e))?;
    emit(g, a.out.as_deref(), &records)
}

fn score_group_cmd(g: &Globals, a: ScoreGroupArgs) -> Result<()> {
    if !(0.0..=1.0).contains(&a.supervision) {
        return Err(Failure::new(
            "config",
            format!("supervision must be in [0, 1], got {}", a.supervision),
        ));
    }
    let judge = judge(g, &a.judge)?;
    let embedder = embedder(g, &a.embed)?;
    let rows: Vec<TraceRow> = read_rows("score-group", &a.traces)?;
    let claims = claims_by_id("score-group", &a.claims)?;
    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<&str>> = HashMap::new();
    for r in &rows {
        let v = groups.entry(&r.id).or_insert_with(|| {
            order.push(&r.id);
            Vec::new()
        });
        v.push(&r.trace);
    }
    for id in &order {
        let n = groups[id].len();
        if n as u64 != a.group_size {
            return Err(Failure::new(
                "score-group",
                format!("claim {id:?} has {n} rollouts, expected {}", a.group_size),
            ));
        }
        lookup("score-group", &claims, id)?;
    }
    let partition = partition_supervision(&order, a.supervision, derive_seed(g.seed(), "supervision"));
    if g.dry_run {
        let labeled = partition.values().filter(|p| **p == Partition::Labeled).count();
        println!(
            "{}",
            json!({"dry_run": true, "groups": order.len(), "labeled": labeled})
        );
        return Ok(());
    }
    let backends = RewardBackends {
        judge: &judge,
        embedder: &embedder,
    };
    let mut out = Vec::with_capacity(order.len());
    for id in &order {
        let labeled = partition[*id] == Partition::Labeled;
        let scored =
            score_group(&claims[*id], &groups[id], labeled, backends).map_err(|e| Failure::new("score-group", e))?;
        out.push(scored);
    }
    emit(g, a.out.as_deref(), &out)
}

#[derive(Deserialize)]
struct PredRow {
    id: String,
    pred: String,
}

fn eval(a: &EvalArgs) -> Result<()> {
    let labels = LabelMap::default();
    let rows: Vec<PredRow> = read_rows("eval", &a.preds)?;
    let gold = claims_by_id("eval", &a.gold)?;
    let mut preds = Vec::with_capacity(rows.len());
    let mut golds = Vec::with_capacity(rows.len());
    for r in &rows {
        let p = labels
            .get(&r.pred)
            .ok_or_else(|| Failure::new("eval", format!("unknown label {:?} for {:?}", r.pred, r.id)))?;
        let rec = lookup("eval", &gold, &r.id)?;
        let gl = rec
            .label
            .ok_or_else(|| Failure::new("eval", format!("claim {:?} has no gold label", r.id)))?;
        preds.push(p);
        golds.push(gl);
    }
    let counts = ConfusionCounts::from_labels(&preds, &golds).map_err(|e| Failure::new("eval", e))?;
    let bacc = counts.balanced_accuracy().map_err(|e| Failure::new("eval", e))?;
    if a.json {
        println!(
            "{}",
            json!({"balanced_accuracy": bacc, "accuracy": counts.accuracy(), "counts": counts, "n": preds.len()})
        );
    } else {
        println!("{bacc:.4}");
    }
    Ok(())
}
